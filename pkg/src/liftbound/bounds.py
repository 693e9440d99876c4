"""Closed-form mixing and lifting bounds, plus a side-by-side report.

Two conventions are fixed here and reported in every :class:`BoundReport`:

* the factor written ``log(sqrt(beta)/2)`` is negative for every admissible
  beta, so it is evaluated as ``log(2/sqrt(beta))``;
* the lift bound appears with two different constants (``16 sqrt 2`` and
  ``32``); both are computed and neither is preferred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .chain import FiniteChain, mixing_time
from .conductance import conductance_exact, conductance_sweep
from .decomposition import KernelDecomposition, certify_beta_gamma, pi_star

LOG_CONVENTION = "log(sqrt(beta)/2) evaluated as log(2/sqrt(beta)) > 0"


class InapplicableBoundError(ValueError):
    """A bound's hypothesis failed and no waiver was given."""


def _check_constants(gamma: float, beta: float, pi_star: float) -> None:
    for name, v in (("gamma", gamma), ("beta", beta), ("pi_star", pi_star)):
        if not 0 < v <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {v}")


def _log_factors(beta: float, pi_star: float) -> tuple[float, float]:
    return math.log(4.0 / pi_star), math.log(2.0 / math.sqrt(beta))


def evolving_set_upper_bound(
    phi: float, gamma: float, beta: float, pi_star: float, waive: bool = False
) -> float:
    """``(32 / (gamma phi^2)) log(4/pi_*) log(2/sqrt(beta))``; needs ``phi <= 1/4``."""
    _check_constants(gamma, beta, pi_star)
    if not phi > 0:
        raise ValueError("conductance must be positive")
    if phi > 0.25 and not waive:
        raise InapplicableBoundError(f"upper bound needs conductance <= 1/4, got {phi:.6g}")
    a, b = _log_factors(beta, pi_star)
    return 32.0 / (gamma * phi * phi) * a * b


def thm1_coefficient(gamma: float, beta: float, pi_star: float) -> float:
    _check_constants(gamma, beta, pi_star)
    a, b = _log_factors(beta, pi_star)
    return math.sqrt(gamma) / (16.0 * math.sqrt(2.0 * a * b))


def thm3_coefficient(gamma: float, beta: float, pi_star: float) -> float:
    _check_constants(gamma, beta, pi_star)
    a, b = _log_factors(beta, pi_star)
    return math.sqrt(gamma) / (32.0 * math.sqrt(a * b))


def lift_lower_bound_thm1(tau: float, gamma: float, beta: float, pi_star: float) -> float:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return thm1_coefficient(gamma, beta, pi_star) * math.sqrt(tau)


def lift_lower_bound_thm3(tau: float, gamma: float, beta: float, pi_star: float) -> float:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return thm3_coefficient(gamma, beta, pi_star) * math.sqrt(tau)


def clp_coefficient(min_pi: float) -> float:
    if not 0 < min_pi < 1:
        raise ValueError("min_pi must lie in (0, 1)")
    return math.sqrt(-1.0 / math.log(min_pi)) / (10.0 * math.sqrt(30.0))


def clp_lower_bound(tau: float, min_pi: float) -> float:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return clp_coefficient(min_pi) * math.sqrt(tau)


# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    phi: float
    phi_method: str
    tau: int
    gamma: float
    beta: float
    pi_star: float
    min_pi: float
    laziness: float
    conductance_lower: float
    evolving_set_upper: float | None
    thm1_coefficient: float
    thm3_coefficient: float
    clp_coefficient: float
    thm1_bound: float
    thm3_bound: float
    clp_bound: float
    lift_tau: int | None = None
    flags: dict[str, bool] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    CSV_COLUMNS = (
        "phi", "phi_method", "tau", "gamma", "beta", "pi_star", "min_pi", "laziness",
        "conductance_lower", "evolving_set_upper", "thm1_coefficient", "thm3_coefficient",
        "clp_coefficient", "thm1_bound", "thm3_bound", "clp_bound", "lift_tau", "ok",
    )

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d[c] for c in self.CSV_COLUMNS]

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "phi_method": self.phi_method,
            "tau": self.tau,
            "gamma": self.gamma,
            "beta": self.beta,
            "pi_star": self.pi_star,
            "min_pi": self.min_pi,
            "laziness": self.laziness,
            "conductance_lower": self.conductance_lower,
            "evolving_set_upper": self.evolving_set_upper,
            "thm1_coefficient": self.thm1_coefficient,
            "thm3_coefficient": self.thm3_coefficient,
            "clp_coefficient": self.clp_coefficient,
            "thm1_bound": self.thm1_bound,
            "thm3_bound": self.thm3_bound,
            "clp_bound": self.clp_bound,
            "lift_tau": self.lift_tau,
            "flags": dict(self.flags),
            "violations": list(self.violations),
            "notes": list(self.notes),
            "ok": self.ok,
        }


def compare_bounds(
    chain: FiniteChain,
    decomp: KernelDecomposition,
    beta: float,
    lift_tau_measured: int | None = None,
    waive: bool = False,
    tau: int | None = None,
    phi: float | None = None,
    max_states: int = 20,
) -> BoundReport:
    """Evaluate every bound on one chain and flag violations.

    Conductance is exact when the chain is small enough, otherwise it comes
    from the sweep families and the report says so.
    """
    notes = [LOG_CONVENTION, "lift bound reported with both the 16*sqrt(2) and 32 constants"]
    flags = {}
    lazy = chain.laziness
    flags["half_lazy"] = lazy >= 0.5 - 1e-12
    if not flags["half_lazy"] and not waive:
        raise InapplicableBoundError(f"bounds need a 1/2-lazy chain; laziness is {lazy:.6g}")

    if phi is not None:
        phi_method = "given"
    elif chain.n <= max_states:
        phi, phi_method = conductance_exact(chain, max_states).value, "exact"
    else:
        phi, phi_method = conductance_sweep(chain).value, "heuristic"
        notes.append("conductance is a sweep upper bound, so 1/(4 phi) is only indicative")
    if tau is None:
        tau = mixing_time(chain)
    cert = certify_beta_gamma(chain, beta, decomposition=decomp)
    ps = pi_star(decomp, chain.pi)
    flags["certified"] = True
    flags["certificate_vacuous"] = cert.vacuous
    flags["certificate_exact"] = cert.method == "exact"
    flags["phi_le_quarter"] = phi <= 0.25
    min_pi = float(chain.pi.min())

    upper = None
    if flags["phi_le_quarter"] or waive:
        upper = evolving_set_upper_bound(phi, cert.gamma, beta, ps, waive=True)
    else:
        notes.append("evolving-set upper bound skipped: conductance above 1/4")

    t1 = thm1_coefficient(cert.gamma, beta, ps)
    t3 = thm3_coefficient(cert.gamma, beta, ps)
    clp = clp_coefficient(min_pi)
    report = BoundReport(
        phi=phi,
        phi_method=phi_method,
        tau=int(tau),
        gamma=cert.gamma,
        beta=beta,
        pi_star=ps,
        min_pi=min_pi,
        laziness=lazy,
        conductance_lower=1.0 / (4.0 * phi),
        evolving_set_upper=upper,
        thm1_coefficient=t1,
        thm3_coefficient=t3,
        clp_coefficient=clp,
        thm1_bound=t1 * math.sqrt(tau),
        thm3_bound=t3 * math.sqrt(tau),
        clp_bound=clp * math.sqrt(tau),
        lift_tau=lift_tau_measured,
        flags=flags,
        notes=notes,
    )
    eps = 1e-10
    if phi_method == "exact" and report.conductance_lower > tau + eps:
        report.violations.append("1/(4 phi) exceeds the measured mixing time")
    if upper is not None and tau > upper + eps:
        report.violations.append("measured mixing time exceeds the evolving-set upper bound")
    if lift_tau_measured is not None:
        for name, val in (("thm1", report.thm1_bound), ("thm3", report.thm3_bound),
                          ("clp", report.clp_bound)):
            if lift_tau_measured < val - eps:
                report.violations.append(f"lift mixing time {lift_tau_measured} below the {name} bound {val:.6g}")
    return report
