"""Continuous kernels, their grid discretizations and the torus example."""

from .diagnostics import (
    StudyRow,
    StudyTable,
    ThetaEstimates,
    UnsupportedDiagnosticError,
    convergence_study,
    theta_diagnostics,
)
from .discretize import (
    CoveringRegion,
    DiscretizationError,
    Grid,
    GridChain,
    build_grid_chain,
    covering_map,
    discretize_measure,
    discretize_states,
    metropolize,
    proposal_kernel,
)
from .kernel import (
    ContinuityCheck,
    ContinuousKernel,
    Density,
    Domain,
    Factor,
    JumpRule,
    KernelError,
    continuity_check,
    row_tv,
    torus_example_kernel,
)
from .torus import (
    DiffusiveCheck,
    FourierBound,
    diffusive_bound,
    diffusive_lower_check,
    fourier_mixing_bound,
    minimal_T,
    upper_bound_lemma_T,
    upper_bound_lemma_tv,
)

__all__ = [
    "ContinuityCheck", "ContinuousKernel", "CoveringRegion", "Density", "DiffusiveCheck",
    "DiscretizationError", "Domain", "Factor", "FourierBound", "Grid", "GridChain", "JumpRule",
    "KernelError", "StudyRow", "StudyTable", "ThetaEstimates", "UnsupportedDiagnosticError",
    "build_grid_chain", "continuity_check", "convergence_study", "covering_map",
    "diffusive_bound", "diffusive_lower_check", "discretize_measure", "discretize_states",
    "fourier_mixing_bound", "metropolize", "minimal_T", "proposal_kernel", "row_tv",
    "theta_diagnostics", "torus_example_kernel", "upper_bound_lemma_T", "upper_bound_lemma_tv",
]
