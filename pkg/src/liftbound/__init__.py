"""Exact tools for conductance, evolving-set and lifting bounds on Markov chains.

Finite chains are handled exactly (dense linear algebra, exhaustive subset
enumeration where feasible).  Continuous kernels enter through their grid
discretizations.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    InapplicableBoundError,
    clp_coefficient,
    compare_bounds,
    evolving_set_upper_bound,
    lift_lower_bound_thm1,
    lift_lower_bound_thm3,
    thm1_coefficient,
    thm3_coefficient,
)
from .chain import (
    ChainError,
    FiniteChain,
    NotMixedError,
    ReducibleChainError,
    mixing_profile,
    mixing_time,
    stationary_distribution,
    tv_distance,
    validate,
)
from .conductance import CutResult, conductance_exact, conductance_sweep, set_conductance
from .decomposition import (
    CertificationError,
    KernelDecomposition,
    ball_decomposition,
    canonical_decomposition,
    certify_beta_gamma,
    pi_star,
)
from .lifting import LiftedChain, dhn_lifted_cycle, verify_conductance_contraction, verify_lift

__all__ = [
    "BoundReport", "CertificationError", "ChainError", "CutResult", "FiniteChain",
    "InapplicableBoundError", "KernelDecomposition", "LiftedChain", "NotMixedError",
    "ReducibleChainError", "ball_decomposition", "canonical_decomposition", "certify_beta_gamma",
    "clp_coefficient", "compare_bounds", "conductance_exact", "conductance_sweep",
    "dhn_lifted_cycle", "evolving_set_upper_bound", "lift_lower_bound_thm1",
    "lift_lower_bound_thm3", "mixing_profile", "mixing_time", "pi_star", "set_conductance",
    "stationary_distribution", "thm1_coefficient", "thm3_coefficient", "tv_distance", "validate",
    "verify_conductance_contraction", "verify_lift",
]
