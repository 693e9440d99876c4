"""Ergodic flow, set conductance and global conductance.

Exact conductance enumerates every subset as a bitmask; the sweep variant
minimizes over structured candidate families and is only an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import FiniteChain, mask_to_int

HALF_TOL = 1e-12
TIE_TOL = 1e-12
DEFAULT_MAX_STATES = 20
HARD_MAX_STATES = 24


class ConductanceError(ValueError):
    pass


@dataclass
class CutResult:
    value: float
    witness: np.ndarray  # boolean mask
    method: str  # "exact" | "heuristic"

    @property
    def bitmask(self) -> int:
        return mask_to_int(self.witness)

    def to_dict(self, chain: FiniteChain | None = None) -> dict:
        if chain is not None:
            witness = chain.labels(self.witness)
        else:
            witness = [int(i) for i in np.flatnonzero(self.witness)]
        return {"phi": self.value, "witness": witness, "method": self.method}


def ergodic_flow(chain: FiniteChain, A, B) -> float:
    a = chain.mask(A)
    b = chain.mask(B)
    if not a.any() or not b.any():
        return 0.0
    return float(chain.flow[np.ix_(a, b)].sum())


def set_conductance(chain: FiniteChain, S) -> float:
    s = chain.mask(S)
    mass = chain.pi[s].sum()
    if mass <= 0:
        raise ConductanceError("set conductance needs pi(S) > 0")
    return float(chain.flow[np.ix_(s, ~s)].sum() / mass)


def _subset_values(bits: np.ndarray, pi: np.ndarray, Q: np.ndarray):
    mass = bits @ pi
    inside = np.einsum("ij,ij->i", bits @ Q, bits)
    return mass, mass - inside


def conductance_exact(
    chain: FiniteChain,
    max_states: int = DEFAULT_MAX_STATES,
    chunk: int = 1 << 15,
) -> CutResult:
    """Minimum of ``Q(S, S^c) / pi(S)`` over all ``S`` with ``0 < pi(S) <= 1/2``.

    Sets with ``pi(S) = 1/2`` are kept only when their bitmask is smaller
    than their complement's.  Ties (within 1e-12) go to the smallest bitmask.
    """
    n = chain.n
    if n > min(max_states, HARD_MAX_STATES):
        raise ConductanceError(
            f"{n} states exceeds the exact enumeration cap of {max_states}; "
            "use conductance_sweep for an upper bound"
        )
    pi, Q = chain.pi, chain.flow
    full = (1 << n) - 1
    shifts = np.arange(n, dtype=np.int64)
    best_val, best_mask = np.inf, None
    for start in range(1, full, chunk):
        masks = np.arange(start, min(start + chunk, full), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(float)
        mass, out = _subset_values(bits, pi, Q)
        half = np.abs(mass - 0.5) <= HALF_TOL
        keep = (mass > 0) & ((mass < 0.5 - HALF_TOL) | (half & (masks < (full ^ masks))))
        if not keep.any():
            continue
        vals = np.full(masks.size, np.inf)
        vals[keep] = out[keep] / mass[keep]
        m = vals.min()
        if m < best_val - TIE_TOL:
            best_val = m
            best_mask = int(masks[np.flatnonzero(vals <= m + TIE_TOL)[0]])
        elif m <= best_val + TIE_TOL and best_mask is None:
            best_mask = int(masks[np.flatnonzero(vals <= m + TIE_TOL)[0]])
    if best_mask is None:
        raise ConductanceError("no subset with 0 < pi(S) <= 1/2")
    witness = np.array([(best_mask >> i) & 1 for i in range(n)], dtype=bool)
    return CutResult(float(best_val), witness, "exact")


# ---------------------------------------------------------------------------
# heuristic families


def _arc_candidates(chain: FiniteChain):
    """Best cyclic arc {s, s+1, ..., s+L-1} in state order with pi <= 1/2."""
    n = chain.n
    pi, Q = chain.pi, chain.flow
    big = np.block([[Q, Q], [Q, Q]])
    P = np.zeros((2 * n + 1, 2 * n + 1))
    P[1:, 1:] = big.cumsum(0).cumsum(1)
    cpi = np.concatenate([[0.0], np.cumsum(np.concatenate([pi, pi]))])
    best = (np.inf, None)
    s = np.arange(n)
    for L in range(1, n):
        e = s + L
        mass = cpi[e] - cpi[s]
        inside = P[e, e] - P[s, e] - P[e, s] + P[s, s]
        ok = (mass > 0) & (mass <= 0.5 + HALF_TOL)
        if not ok.any():
            continue
        vals = np.where(ok, (mass - inside) / np.where(ok, mass, 1.0), np.inf)
        i = int(np.argmin(vals))
        if vals[i] < best[0] - TIE_TOL:
            mask = np.zeros(n, dtype=bool)
            mask[(s[i] + np.arange(L)) % n] = True
            best = (float(vals[i]), mask)
    return best


def _fiedler_candidates(chain: FiniteChain):
    """Sweep cuts along the second eigenvector of the symmetrized chain."""
    pi, K = chain.pi, chain.matrix
    n = chain.n
    r = np.sqrt(pi)
    A = r[:, None] * K / r[None, :]
    A = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(A)
    best = (np.inf, None)
    Q = chain.flow
    for col in (-2,) if n > 2 else ():
        f = V[:, col] / r
        for order in (np.argsort(f, kind="stable"), np.argsort(-f, kind="stable")):
            mask = np.zeros(n, dtype=bool)
            mass = 0.0
            inside = 0.0
            for x in order[:-1]:
                # incremental Q(S,S) update when adding x
                inside += Q[x, mask].sum() + Q[mask, x].sum() + Q[x, x]
                mask[x] = True
                mass += pi[x]
                if mass > 0.5 + HALF_TOL:
                    break
                val = (mass - inside) / mass
                if val < best[0] - TIE_TOL:
                    best = (float(val), mask.copy())
    return best


def _local_search(chain: FiniteChain, mask: np.ndarray, budget: int):
    """Single-state flips that decrease Phi(S) while keeping pi(S) <= 1/2."""
    pi, Q = chain.pi, chain.flow
    mask = mask.copy()
    mass = pi[mask].sum()
    inside = Q[np.ix_(mask, mask)].sum()
    val = (mass - inside) / mass
    for _ in range(budget):
        into = Q[:, mask].sum(axis=1)  # Q(x, S)
        outof = Q[mask, :].sum(axis=0)  # Q(S, x)
        d = np.diag(Q)
        sign = np.where(mask, -1.0, 1.0)
        new_mass = mass + sign * pi
        new_inside = np.where(
            mask, inside - into - outof + d, inside + into + outof + d
        )
        ok = (new_mass > 0) & (new_mass <= 0.5 + HALF_TOL)
        cand = np.where(ok, (new_mass - new_inside) / np.where(ok, new_mass, 1.0), np.inf)
        x = int(np.argmin(cand))
        if cand[x] >= val - TIE_TOL:
            break
        mask[x] = ~mask[x]
        mass, inside, val = new_mass[x], new_inside[x], cand[x]
    return float(val), mask


def conductance_sweep(
    chain: FiniteChain,
    families=("interval", "fiedler", "local_search"),
    budget: int = 200,
) -> CutResult:
    """Upper bound on the conductance from structured candidate sets."""
    if isinstance(families, str):
        families = (families,)
    unknown = set(families) - {"interval", "fiedler", "local_search"}
    if unknown:
        raise ValueError(f"unknown sweep families {sorted(unknown)}")
    best = (np.inf, None)
    if "interval" in families:
        best = min(best, _arc_candidates(chain), key=lambda b: b[0])
    if "fiedler" in families:
        best = min(best, _fiedler_candidates(chain), key=lambda b: b[0])
    if best[1] is None:
        # fall back on singletons
        vals = [set_conductance(chain, [x]) for x in range(chain.n) if chain.pi[x] <= 0.5]
        x = int(np.argmin(vals))
        m = np.zeros(chain.n, dtype=bool)
        m[x] = True
        best = (vals[x], m)
    if "local_search" in families and budget > 0:
        refined = _local_search(chain, best[1], budget)
        if refined[0] < best[0] - TIE_TOL:
            best = refined
    return CutResult(float(best[0]), best[1], "heuristic")


def mixing_lower_bound_from_conductance(phi: float) -> float:
    """``tau >= 1 / (4 Phi)``."""
    if not phi > 0:
        raise ValueError("conductance must be positive")
    if phi > 1:
        raise ValueError("conductance cannot exceed 1")
    return 1.0 / (4.0 * phi)
