"""Finite Markov chains: validation, stationary law, powers, total variation
and exact mixing profiles.

A chain is stored as a dense row-stochastic matrix ``K`` with ``K[x, y]`` the
probability of moving from ``x`` to ``y``.  Everything here is exact linear
algebra in float64 with explicit tolerances; nothing is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

STRUCTURAL_TOL = 1e-12
FIXED_POINT_TOL = 1e-10
BOUNDARY_TOL = 1e-12
DEFAULT_CAP = 10**6


class ChainError(ValueError):
    """Structural problem with a chain (shape, labels, subsets)."""


class ReducibleChainError(ChainError):
    """The chain has more than one closed class, so pi is not unique."""


class NotMixedError(RuntimeError):
    """Raised when the iteration cap is hit before the TV threshold."""

    def __init__(self, message: str, t: int, last_tv: float):
        super().__init__(message)
        self.t = t
        self.last_tv = last_tv


@dataclass
class FiniteChain:
    """Labeled finite state space with transition matrix and stationary law.

    ``stationary`` may be omitted; it is then solved for on first access of
    :attr:`pi`.
    """

    states: tuple[str, ...]
    matrix: np.ndarray
    stationary: np.ndarray | None = None
    reversible: bool | None = None

    def __post_init__(self):
        self.matrix = np.array(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ChainError(f"transition matrix must be square, got shape {self.matrix.shape}")
        self.states = tuple(str(s) for s in self.states)
        if len(self.states) != self.matrix.shape[0]:
            raise ChainError(
                f"{len(self.states)} state labels for a {self.matrix.shape[0]}x"
                f"{self.matrix.shape[0]} matrix"
            )
        if len(set(self.states)) != len(self.states):
            raise ChainError("state labels must be unique")
        if self.stationary is not None:
            self.stationary = np.array(self.stationary, dtype=float)
            if self.stationary.shape != (self.n,):
                raise ChainError(
                    f"stationary vector has length {self.stationary.size}, expected {self.n}"
                )
        self._index = {s: i for i, s in enumerate(self.states)}

    @classmethod
    def from_matrix(cls, matrix, states: Sequence[str] | None = None, stationary=None, **kw):
        matrix = np.asarray(matrix, dtype=float)
        if states is None:
            states = [str(i) for i in range(matrix.shape[0])]
        return cls(tuple(states), matrix, stationary, **kw)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def pi(self) -> np.ndarray:
        if self.stationary is None:
            self.stationary = stationary_distribution(self.matrix)
        return self.stationary

    @property
    def flow(self) -> np.ndarray:
        """Ergodic flow matrix ``Q[x, y] = pi(x) K(x, y)``."""
        return self.pi[:, None] * self.matrix

    @property
    def laziness(self) -> float:
        return float(np.min(np.diag(self.matrix)))

    def index(self, label) -> int:
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if not 0 <= label < self.n:
                raise ChainError(f"state index {label} out of range")
            return int(label)
        try:
            return self._index[str(label)]
        except KeyError:
            raise ChainError(f"unknown state label {label!r}") from None

    def mask(self, subset) -> np.ndarray:
        """Boolean membership vector for a subset.

        Accepts a bitmask ``int``, a boolean array of length ``n``, or an
        iterable of state indices / labels.
        """
        return as_mask(subset, self.n, self.index)

    def labels(self, mask: np.ndarray) -> list[str]:
        return [self.states[i] for i in np.flatnonzero(mask)]


def as_mask(subset, n: int, index=None) -> np.ndarray:
    if isinstance(subset, np.ndarray) and subset.dtype == bool:
        if subset.shape != (n,):
            raise ChainError(f"boolean subset has shape {subset.shape}, expected ({n},)")
        return subset.copy()
    if isinstance(subset, (int, np.integer)) and not isinstance(subset, bool):
        subset = int(subset)
        if subset < 0 or subset >> n:
            raise ChainError(f"bitmask {subset} has bits outside {n} states")
        return np.array([(subset >> i) & 1 for i in range(n)], dtype=bool)
    mask = np.zeros(n, dtype=bool)
    for item in subset:
        i = index(item) if index is not None else int(item)
        if not 0 <= i < n:
            raise ChainError(f"state index {i} out of range")
        mask[i] = True
    return mask


def mask_to_int(mask: np.ndarray) -> int:
    return sum(1 << int(i) for i in np.flatnonzero(mask))


def int_to_mask(bits: int, n: int) -> np.ndarray:
    return as_mask(bits, n)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    n: int
    stochastic: bool
    laziness: float
    reversible: bool
    stationary_ok: bool
    violations: list[str] = field(default_factory=list)
    max_row_residual: float = 0.0
    max_fixed_point_residual: float = 0.0
    max_reversibility_residual: float = 0.0

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "valid": self.valid,
            "stochastic": self.stochastic,
            "laziness": self.laziness,
            "reversible": self.reversible,
            "stationary_ok": self.stationary_ok,
            "max_row_residual": self.max_row_residual,
            "max_fixed_point_residual": self.max_fixed_point_residual,
            "max_reversibility_residual": self.max_reversibility_residual,
            "violations": list(self.violations),
        }


def validate(chain: FiniteChain, tol: float = STRUCTURAL_TOL) -> ValidationReport:
    """Check every chain invariant and report all violations with residuals."""
    K = chain.matrix
    violations = []
    if not np.all(np.isfinite(K)):
        raise ChainError("transition matrix contains NaN or Inf")

    low, high = K.min(), K.max()
    if low < -tol or high > 1 + tol:
        bad = np.argwhere((K < -tol) | (K > 1 + tol))[0]
        violations.append(
            f"entry ({bad[0]},{bad[1]}) = {K[bad[0], bad[1]]!r} outside [0,1]"
        )
    rows = K.sum(axis=1)
    row_res = np.abs(rows - 1.0)
    for x in np.flatnonzero(row_res > tol):
        violations.append(f"row {x} sums to {rows[x]:.12g}")
    stochastic = not violations

    pi = chain.stationary
    stationary_ok = False
    fp_res = rev_res = float("nan")
    if pi is None and stochastic:
        try:
            pi = stationary_distribution(K)
        except ReducibleChainError as exc:
            violations.append(str(exc))
    if pi is not None:
        fp_res = float(np.max(np.abs(pi @ K - pi)))
        problems = []
        if pi.min() < -tol:
            problems.append(f"stationary vector has negative entry {pi.min():.3g}")
        if abs(pi.sum() - 1.0) > tol:
            problems.append(f"stationary vector sums to {pi.sum():.12g}")
        if fp_res > FIXED_POINT_TOL:
            problems.append(f"stationary vector is not fixed: |piK - pi| = {fp_res:.3g}")
        violations.extend(problems)
        stationary_ok = not problems
        Q = pi[:, None] * K
        rev_res = float(np.max(np.abs(Q - Q.T)))
    reversible = stationary_ok and rev_res <= tol
    if chain.reversible and not reversible:
        violations.append(f"chain flagged reversible but detailed balance residual is {rev_res:.3g}")

    return ValidationReport(
        n=chain.n,
        stochastic=stochastic,
        laziness=float(np.min(np.diag(K))),
        reversible=bool(reversible),
        stationary_ok=stationary_ok,
        violations=violations,
        max_row_residual=float(row_res.max()),
        max_fixed_point_residual=fp_res,
        max_reversibility_residual=rev_res,
    )


# ---------------------------------------------------------------------------
# stationary distribution


def _closed_classes(K: np.ndarray) -> list[np.ndarray]:
    support = K > 0
    n_comp, labels = connected_components(support, directed=True, connection="strong")
    closed = []
    for c in range(n_comp):
        members = labels == c
        leaving = support[members][:, ~members]
        if not leaving.any():
            closed.append(np.flatnonzero(members))
    return closed


def _gth(P: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman state reduction for an irreducible chain."""
    A = np.array(P, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise ReducibleChainError("state reduction hit a state with no exit; chain is reducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    x = np.zeros(n)
    x[0] = 1.0
    for k in range(1, n):
        x[k] = x[:k] @ A[:k, k]
    return x / x.sum()


def stationary_distribution(matrix) -> np.ndarray:
    """Unique stationary vector by GTH elimination on the single closed class.

    Transient states receive mass zero.  More than one closed class raises
    :class:`ReducibleChainError`.
    """
    K = np.asarray(matrix, dtype=float)
    closed = _closed_classes(K)
    if len(closed) != 1:
        raise ReducibleChainError(
            f"chain has {len(closed)} recurrent classes; stationary law is not unique"
        )
    members = closed[0]
    pi = np.zeros(K.shape[0])
    pi[members] = _gth(K[np.ix_(members, members)])
    return pi


def stationary(chain: FiniteChain) -> np.ndarray:
    return stationary_distribution(chain.matrix)


# ---------------------------------------------------------------------------
# distributions, powers, total variation


def as_distribution(weights, tol: float = STRUCTURAL_TOL) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ChainError("a distribution is a 1-D weight vector")
    if w.min(initial=0.0) < -tol:
        raise ChainError(f"distribution has negative weight {w.min():.3g}")
    if abs(w.sum() - 1.0) > tol:
        raise ChainError(f"distribution sums to {w.sum():.12g}")
    return w


def step_power(chain: FiniteChain, t: int) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return np.linalg.matrix_power(chain.matrix, t)


def tv_distance(mu, nu) -> float:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ChainError(f"length mismatch: {mu.shape} vs {nu.shape}")
    return 0.5 * float(np.abs(mu - nu).sum())


def restrict(mu, S, n: int | None = None) -> np.ndarray:
    """Renormalized restriction ``mu|_S``."""
    mu = np.asarray(mu, dtype=float)
    mask = as_mask(S, mu.size)
    mass = mu[mask].sum()
    if mass <= 0:
        raise ChainError("cannot restrict to a set of measure zero")
    out = np.where(mask, mu, 0.0)
    return out / mass


# ---------------------------------------------------------------------------
# mixing


@dataclass
class MixingProfile:
    eps: float
    tau: int
    trace: np.ndarray  # worst-case TV at t = 0..tau


def _is_circulant(K: np.ndarray) -> bool:
    n = K.shape[0]
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return bool(np.array_equal(K, K[0][idx]))


def worst_tv(D: np.ndarray, pi: np.ndarray) -> float:
    return 0.5 * float(np.abs(D - pi).sum(axis=1).max())


def mixing_profile(
    chain: FiniteChain,
    eps: float,
    cap: int = DEFAULT_CAP,
    starts: Iterable[int] | None = None,
) -> MixingProfile:
    """Smallest ``t`` with ``max_x ||K^t(x,.) - pi||_TV < eps``.

    Distributions from every start are advanced one step at a time.  A
    circulant matrix has translated rows, so a single start suffices there.
    ``starts`` restricts the supremum explicitly.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    K = chain.matrix
    pi = chain.pi
    if starts is None:
        starts = [0] if _is_circulant(K) else range(chain.n)
    starts = np.fromiter(starts, dtype=int)
    D = np.zeros((starts.size, chain.n))
    D[np.arange(starts.size), starts] = 1.0
    threshold = eps - BOUNDARY_TOL
    trace = [worst_tv(D, pi)]
    t = 0
    while trace[-1] >= threshold:
        if t >= cap:
            raise NotMixedError(
                f"not mixed within cap {cap} steps (last TV {trace[-1]:.6g})", t, trace[-1]
            )
        nxt = D @ K
        t += 1
        if np.array_equal(nxt, D):
            raise NotMixedError(
                f"distribution is stationary at t={t} with TV {trace[-1]:.6g} >= {eps}; "
                "chain never mixes",
                t,
                trace[-1],
            )
        D = nxt
        trace.append(worst_tv(D, pi))
    return MixingProfile(eps=eps, tau=t, trace=np.array(trace))


def mixing_time(chain: FiniteChain, cap: int = DEFAULT_CAP) -> int:
    return mixing_profile(chain, 0.25, cap=cap).tau
