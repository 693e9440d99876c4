"""Holding/jump representations of a kernel, pi_*, and (beta, gamma) certificates.

A decomposition writes every row as

    K(x, .) = alpha_x delta_x + (1 - alpha_x) sum_U K_{x,U} pi|_U

with a finite list of jump sets ``U`` per state.  The holding atom
``alpha_x`` never counts toward ``pi_*``; explicit singleton jump sets do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chain import STRUCTURAL_TOL, ChainError, FiniteChain

SUBSET_TOL = 1e-12


class DecompositionError(ChainError):
    pass


class CertificationError(ValueError):
    pass


@dataclass(frozen=True)
class Jump:
    states: tuple[int, ...]
    weight: float


@dataclass
class KernelDecomposition:
    alpha: np.ndarray
    jumps: list[list[Jump]]
    degenerate: tuple[int, ...] = ()

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if len(self.jumps) != self.alpha.size:
            raise DecompositionError("one jump list per state is required")

    @property
    def n(self) -> int:
        return self.alpha.size

    def check(self, pi, tol: float = STRUCTURAL_TOL) -> list[str]:
        """Return the list of violated decomposition invariants."""
        pi = np.asarray(pi, dtype=float)
        problems = []
        for x, (a, jumps) in enumerate(zip(self.alpha, self.jumps)):
            if not 0.0 <= a <= 1.0:
                problems.append(f"alpha[{x}] = {a} outside [0,1]")
            if a >= 1.0:
                continue
            total = sum(j.weight for j in jumps)
            if abs(total - 1.0) > tol:
                problems.append(f"jump weights of state {x} sum to {total:.12g}")
            for j in jumps:
                if j.weight < 0:
                    problems.append(f"negative jump weight at state {x}")
                if not j.states:
                    problems.append(f"empty jump set at state {x}")
                elif j.weight > 0 and pi[list(j.states)].sum() <= 0:
                    problems.append(f"jump set {j.states} of state {x} has pi(U) = 0")
        return problems


def canonical_decomposition(chain: FiniteChain) -> KernelDecomposition:
    """alpha_x = K(x,x) and one singleton jump per off-diagonal target."""
    K = chain.matrix
    diag = np.diag(K).copy()
    if np.any(diag <= 0):
        x = int(np.flatnonzero(diag <= 0)[0])
        raise DecompositionError(f"state {x} has K(x,x) = 0; chain is not lazy")
    jumps, degenerate = [], []
    for x in range(chain.n):
        off = 1.0 - diag[x]
        if off <= STRUCTURAL_TOL:
            jumps.append([])
            degenerate.append(x)
            continue
        row = [Jump((y,), K[x, y] / off) for y in range(chain.n) if y != x and K[x, y] > 0]
        jumps.append(row)
    return KernelDecomposition(diag, jumps, tuple(degenerate))


def ball_decomposition(n_states: int, k: int, hold: float = 0.5) -> KernelDecomposition:
    """Holding ``hold`` plus a single jump to the punctured k-ball on Z_m."""
    jumps = []
    for x in range(n_states):
        U = tuple(sorted({(x + d) % n_states for d in range(-k, k + 1) if d != 0}))
        jumps.append([Jump(U, 1.0)])
    return KernelDecomposition(np.full(n_states, hold), jumps)


def reconstruct_matrix(decomp: KernelDecomposition, pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    n = decomp.n
    K = np.zeros((n, n))
    for x in range(n):
        a = decomp.alpha[x]
        K[x, x] += a
        for j in decomp.jumps[x]:
            if j.weight == 0:
                continue
            idx = list(j.states)
            mass = pi[idx].sum()
            if mass <= 0:
                raise DecompositionError(f"jump set {j.states} of state {x} has pi(U) = 0")
            K[x, idx] += (1.0 - a) * j.weight * pi[idx] / mass
    return K


def reconstruct(decomp: KernelDecomposition, pi, states=None) -> FiniteChain:
    K = reconstruct_matrix(decomp, pi)
    return FiniteChain.from_matrix(K, states=states, stationary=np.asarray(pi, dtype=float))


def reconstruction_residual(decomp: KernelDecomposition, chain: FiniteChain) -> float:
    return float(np.max(np.abs(reconstruct_matrix(decomp, chain.pi) - chain.matrix)))


def pi_star(decomp: KernelDecomposition, pi) -> float:
    """Smallest stationary mass of a jump set carrying positive weight."""
    pi = np.asarray(pi, dtype=float)
    masses = [
        pi[list(j.states)].sum()
        for x, jumps in enumerate(decomp.jumps)
        if decomp.alpha[x] < 1.0
        for j in jumps
        if j.weight > 0
    ]
    if not masses:
        raise DecompositionError("decomposition has no jump set with positive weight")
    return float(min(masses))


# ---------------------------------------------------------------------------
# (beta, gamma) certification


@dataclass
class CertifiedConstants:
    beta: float
    gamma: float
    pi_star: float | None
    method: str  # "exact" or "relaxation"
    sup_ratio: float
    vacuous: bool = False
    witness_set: tuple[int, ...] = ()
    witness_target: int | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "pi_star": self.pi_star,
            "method": self.method,
            "sup_ratio": self.sup_ratio,
            "vacuous": self.vacuous,
            "witness_set": list(self.witness_set),
            "witness_target": self.witness_target,
            "notes": list(self.notes),
        }


def _integer_weights(pi: np.ndarray, beta: float, max_denominator: int = 10**6):
    """Common-denominator integer weights when pi has <= 6 significant decimals."""
    fracs = [Fraction(float(p)).limit_denominator(max_denominator) for p in pi]
    if any(abs(float(f) - p) > 1e-15 for f, p in zip(fracs, pi)):
        return None
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
        if den > max_denominator:
            return None
    w = np.array([int(f * den) for f in fracs])
    cap = math.floor(beta * den + 1e-9)
    return w, cap


def _knapsack_dp(values: np.ndarray, weights: np.ndarray, cap: int):
    """0/1 knapsack by DP over capacity; returns (best value, chosen items)."""
    n = values.size
    best = np.zeros(cap + 1)
    take = np.zeros((n, cap + 1), dtype=bool)
    for i in range(n):
        w = int(weights[i])
        if w > cap or values[i] <= 0:
            continue
        cand = best[: cap + 1 - w] + values[i]
        better = cand > best[w:] + 1e-15
        take[i, w:] = better
        best[w:] = np.where(better, cand, best[w:])
    c = int(np.argmax(best))
    chosen = []
    for i in range(n - 1, -1, -1):
        if take[i, c]:
            chosen.append(i)
            c -= int(weights[i])
    return float(best.max()), tuple(sorted(chosen))


def _bitmask_sup(ratio: np.ndarray, pi: np.ndarray, beta: float):
    """Exhaustive max over subsets with pi(S) <= beta, for every target y."""
    n = pi.size
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    feasible = bits @ pi <= beta + SUBSET_TOL
    if not feasible.any():
        return 0.0, (), None
    bits = bits[feasible]
    vals = bits @ ratio  # (subsets, targets)
    i, y = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return float(vals[i, y]), tuple(int(v) for v in np.flatnonzero(bits[i])), int(y)


def _exact_sup(ratio: np.ndarray, pi: np.ndarray, beta: float):
    n = pi.size
    if np.ptp(pi) <= 1e-15 * pi.max():
        m = int(math.floor(beta / pi[0] + 1e-9))
        if m == 0:
            return 0.0, (), None, "uniform"
        top = np.sort(ratio, axis=0)[::-1][:m].sum(axis=0)
        y = int(np.argmax(top))
        chosen = tuple(sorted(int(v) for v in np.argsort(-ratio[:, y], kind="stable")[:m]))
        return float(top[y]), chosen, y, "uniform"
    if n <= 20:
        v, s, y = _bitmask_sup(ratio, pi, beta)
        return v, s, y, "enumeration"
    iw = _integer_weights(pi, beta)
    if iw is not None and iw[1] <= 10**6:
        w, cap = iw
        best, best_set, best_y = 0.0, (), None
        for y in range(n):
            v, chosen = _knapsack_dp(ratio[:, y], w, cap)
            if v > best:
                best, best_set, best_y = v, chosen, y
        return best, best_set, best_y, "knapsack"
    return None


def _relaxed_sup(ratio: np.ndarray, pi: np.ndarray, beta: float):
    """Fractional-knapsack upper bound on the supremum (greedy by density)."""
    best, best_y = 0.0, None
    if pi.min() > beta + SUBSET_TOL:
        return 0.0, None
    density = ratio / pi[:, None]
    for y in range(pi.size):
        order = np.argsort(-density[:, y], kind="stable")
        room, total = beta, 0.0
        for x in order:
            if room <= 0 or ratio[x, y] <= 0:
                break
            take = min(1.0, room / pi[x])
            total += take * ratio[x, y]
            room -= take * pi[x]
        if total > best:
            best, best_y = total, y
    return best, best_y


def certify_beta_gamma(
    chain: FiniteChain,
    beta: float,
    mode: str = "exact",
    decomposition: KernelDecomposition | None = None,
) -> CertifiedConstants:
    """Largest gamma with ``Q(S,y)/pi(y) <= 1 - gamma`` for all ``pi(S) <= beta``.

    ``mode="exact"`` solves the per-target 0/1 knapsack exactly (uniform pi,
    bitmask enumeration for n <= 20, integer DP on a common denominator) and
    falls back to the relaxation when none applies, noting it.  The
    relaxation over-estimates the supremum, so its gamma is conservative.
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if mode not in ("exact", "relaxation"):
        raise ValueError(f"unknown certification mode {mode!r}")
    pi = chain.pi
    ratio = chain.flow / np.where(pi > 0, pi, np.inf)[None, :]
    notes = []
    ps = None
    try:
        if decomposition is None:
            decomposition = canonical_decomposition(chain)
        ps = pi_star(decomposition, pi)
    except DecompositionError as exc:
        notes.append(f"pi_star unavailable: {exc}")

    witness, target, method = (), None, mode
    if pi.min() > beta + SUBSET_TOL:
        sup, vacuous = 0.0, True
        notes.append("no nonempty set has pi(S) <= beta; certificate is vacuous")
        method = "exact"
    else:
        vacuous = False
        exact = _exact_sup(ratio, pi, beta) if mode == "exact" else None
        if exact is not None:
            sup, witness, target, how = exact
            notes.append(f"exact supremum via {how}")
            method = "exact"
        else:
            if mode == "exact":
                notes.append("exact knapsack infeasible for this pi; fell back to relaxation")
            sup, target = _relaxed_sup(ratio, pi, beta)
            method = "relaxation"
    sup = min(sup, 1.0)
    gamma = 1.0 - sup
    if gamma <= 0:
        raise CertificationError(
            f"sup Q(S,y)/pi(y) = {sup:.6g} over pi(S) <= {beta}; no gamma in (0,1] exists"
        )
    return CertifiedConstants(
        beta=beta,
        gamma=gamma,
        pi_star=ps,
        method=method,
        sup_ratio=sup,
        vacuous=vacuous,
        witness_set=witness,
        witness_target=target,
        notes=notes,
    )
