"""Lifts of finite chains: verification, the lifted cycle walk and the
conductance contraction check.

On a finite space a kernel ``Kh`` on ``Omega_hat`` with projection ``f`` is
a lift of ``K`` exactly when, for all base states ``s, y``,

    sum_{xh in f^-1(s)} pih(xh) Kh(xh, f^-1(y)) = pi(s) K(s, y),

which also forces ``pi(s) = pih(f^-1(s))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainError, FiniteChain
from .conductance import (
    DEFAULT_MAX_STATES,
    conductance_exact,
    conductance_sweep,
    set_conductance,
)

LIFT_TOL = 1e-12


@dataclass
class LiftedChain:
    hat: FiniteChain
    base: FiniteChain
    projection: np.ndarray  # projection[i] = base index of hat state i

    def __post_init__(self):
        self.projection = np.asarray(self.projection, dtype=int)
        if self.projection.shape != (self.hat.n,):
            raise ChainError("projection must map every lifted state")
        if self.projection.min() < 0 or self.projection.max() >= self.base.n:
            raise ChainError("projection points outside the base state space")

    @classmethod
    def from_labels(cls, hat: FiniteChain, base: FiniteChain, mapping: dict):
        missing = [s for s in hat.states if s not in mapping]
        if missing:
            raise ChainError(f"projection is not total; unmapped lifted states {missing[:5]}")
        proj = [base.index(mapping[s]) for s in hat.states]
        return cls(hat, base, np.array(proj))

    def fiber_matrix(self) -> np.ndarray:
        F = np.zeros((self.hat.n, self.base.n))
        F[np.arange(self.hat.n), self.projection] = 1.0
        return F

    def pullback(self, base_mask: np.ndarray) -> np.ndarray:
        return np.asarray(base_mask, dtype=bool)[self.projection]


@dataclass
class LiftCheck:
    lift_residual: float
    marginal_residual: float
    passed: bool
    worst_pair: tuple[int, int]


def verify_lift(lift: LiftedChain, tol: float = LIFT_TOL) -> LiftCheck:
    counts = np.bincount(lift.projection, minlength=lift.base.n)
    empty = np.flatnonzero((counts == 0) & (lift.base.pi > 0))
    if empty.size:
        raise ChainError(
            f"projection is not onto: base state {lift.base.states[empty[0]]!r} has an empty fiber"
        )
    F = lift.fiber_matrix()
    pih = lift.hat.pi
    flow_hat = F.T @ (pih[:, None] * lift.hat.matrix) @ F
    diff = np.abs(flow_hat - lift.base.flow)
    marg = float(np.max(np.abs(F.T @ pih - lift.base.pi)))
    worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
    res = float(diff.max())
    return LiftCheck(res, marg, res <= tol and marg <= tol, (int(worst[0]), int(worst[1])))


def dhn_lifted_cycle(n: int) -> LiftedChain:
    """Direction-carrying lift of the lazy cycle walk on Z_n.

    From ``(i, s)`` the walk holds with probability 1/2, advances to
    ``(i+s, s)`` with probability ``(1 - 1/n)/2`` and otherwise reverses to
    ``(i-s, -s)``.  States are ordered ``(0,+), ..., (n-1,+), (0,-), ...``.
    """
    if n < 3:
        raise ValueError("the lifted cycle needs n >= 3")
    from .catalog import lazy_cycle

    m = 2 * n
    K = np.zeros((m, m))

    def idx(i, s):
        return (i % n) + (0 if s > 0 else n)

    for s in (1, -1):
        for i in range(n):
            a = idx(i, s)
            K[a, a] += 0.5
            K[a, idx(i + s, s)] += 0.5 * (1.0 - 1.0 / n)
            K[a, idx(i - s, -s)] += 0.5 / n
    labels = [f"{i}+" for i in range(n)] + [f"{i}-" for i in range(n)]
    hat = FiniteChain.from_matrix(K, states=labels, stationary=np.full(m, 1.0 / m))
    base = lazy_cycle(n)
    proj = np.concatenate([np.arange(n), np.arange(n)])
    return LiftedChain(hat, base, proj)


@dataclass
class ContractionCheck:
    phi_hat: float
    phi: float
    phi_hat_method: str
    phi_method: str
    verdict: str  # pass | inconclusive | fail

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_conductance_contraction(
    lift: LiftedChain, max_states: int = DEFAULT_MAX_STATES, tol: float = 1e-12
) -> ContractionCheck:
    """Check ``Phi_hat <= Phi``.

    The base witness pulled back through the projection has exactly the
    base conductance, so any upper bound on ``Phi_hat`` at or below an exact
    ``Phi`` certifies the inequality.
    """
    if lift.base.n <= max_states:
        base = conductance_exact(lift.base, max_states)
    else:
        base = conductance_sweep(lift.base)
    pulled = lift.pullback(base.witness)
    candidates = [set_conductance(lift.hat, pulled)]
    if lift.hat.n <= max_states:
        hat = conductance_exact(lift.hat, max_states)
        hat_method = "exact"
        phi_hat = hat.value
    else:
        candidates.append(conductance_sweep(lift.hat).value)
        hat_method = "upper_bound"
        phi_hat = min(candidates)
    if base.method != "exact":
        verdict = "inconclusive"
    elif phi_hat <= base.value + tol:
        verdict = "pass"
    elif hat_method == "exact":
        verdict = "fail"
    else:
        verdict = "inconclusive"
    return ContractionCheck(float(phi_hat), base.value, hat_method, base.method, verdict)
