"""The evolving-set process and exact checks of its identities.

From a set ``S`` the next set is the level set ``{y : Q(S,y)/pi(y) >= U}``
for a uniform threshold ``U``.  Because only the ordering of the levels
matters, the exact one-step law has at most ``n + 1`` outcomes whose
probabilities are the gaps between consecutive sorted levels.  Sets are
Python ``int`` bitmasks (bit ``i`` is state ``i``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainError, FiniteChain, mask_to_int

LEVEL_TOL = 1e-12
HALF_TOL = 1e-12
GENERATOR = "numpy.random.PCG64"
DEFAULT_STATE_CAP = 4096


class SetChainCapError(RuntimeError):
    def __init__(self, message: str, frontier: int, partial: dict[int, float]):
        super().__init__(message)
        self.frontier = frontier
        self.partial = partial


def _bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=float)


def _to_int(chain: FiniteChain, S) -> int:
    if isinstance(S, (int, np.integer)) and not isinstance(S, bool):
        if S < 0 or int(S) >> chain.n:
            raise ChainError(f"bitmask {S} has bits outside {chain.n} states")
        return int(S)
    return mask_to_int(chain.mask(S))


def levels(chain: FiniteChain, S) -> np.ndarray:
    """``Q(S, y) / pi(y)`` for every ``y``, clipped to [0, 1]."""
    mask = _to_int(chain, S)
    mass_in = _bits(mask, chain.n) @ chain.flow
    return np.clip(mass_in / chain.pi, 0.0, 1.0)


def evolve_step(chain: FiniteChain, S, u: float) -> int:
    if not 0.0 < u < 1.0:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    mask = _to_int(chain, S)
    full = (1 << chain.n) - 1
    if mask in (0, full):
        return mask
    lv = levels(chain, mask)
    return mask_to_int(lv >= u)


def one_step_outcomes(chain: FiniteChain, S) -> list[tuple[int, float]]:
    """Exact law of ``S_1`` given ``S_0 = S`` as ``(bitmask, probability)`` pairs.

    Levels within 1e-12 of each other are merged into one outcome.
    """
    mask = _to_int(chain, S)
    full = (1 << chain.n) - 1
    if mask in (0, full):
        return [(mask, 1.0)]
    lv = levels(chain, mask)
    order = np.argsort(-lv, kind="stable")
    distinct: list[float] = []
    groups: list[list[int]] = []
    for y in order:
        if distinct and distinct[-1] - lv[y] <= LEVEL_TOL:
            groups[-1].append(int(y))
        else:
            distinct.append(float(lv[y]))
            groups.append([int(y)])
    out = []
    top = distinct[0]
    if 1.0 - top > 0:
        out.append((0, 1.0 - top))
    current = 0
    for j, (lev, grp) in enumerate(zip(distinct, groups)):
        for y in grp:
            current |= 1 << y
        nxt = distinct[j + 1] if j + 1 < len(distinct) else 0.0
        p = lev - nxt
        if p > 0:
            out.append((current, p))
    return out


class SetChain:
    """Memoized exact transition structure of the evolving-set process."""

    def __init__(self, chain: FiniteChain):
        self.chain = chain
        self._cache: dict[int, list[tuple[int, float]]] = {}

    def outcomes(self, mask: int) -> list[tuple[int, float]]:
        out = self._cache.get(mask)
        if out is None:
            out = self._cache[mask] = one_step_outcomes(self.chain, mask)
        return out

    def step(self, dist: dict[int, float]) -> dict[int, float]:
        nxt: dict[int, float] = {}
        for m in sorted(dist):
            p = dist[m]
            for o, q in self.outcomes(m):
                nxt[o] = nxt.get(o, 0.0) + p * q
        return nxt

    def distributions(self, S0, T: int, state_cap: int = DEFAULT_STATE_CAP):
        """Yield the exact law of ``S_t`` for ``t = 0..T``."""
        dist = {_to_int(self.chain, S0): 1.0}
        yield dist
        for t in range(1, T + 1):
            dist = self.step(dist)
            if len(dist) > state_cap:
                raise SetChainCapError(
                    f"set chain frontier has {len(dist)} sets at t={t}, above cap {state_cap}",
                    len(dist),
                    dist,
                )
            yield dist


@dataclass
class SetDistribution:
    t: int
    probs: dict[int, float]
    n: int

    def marginals(self) -> np.ndarray:
        """``P[y in S_t]`` for every state ``y``."""
        out = np.zeros(self.n)
        for m, p in self.probs.items():
            out += p * _bits(m, self.n)
        return out

    def total(self) -> float:
        return float(sum(self.probs.values()))


def set_chain_distribution(
    chain: FiniteChain, S0, T: int, state_cap: int = DEFAULT_STATE_CAP
) -> SetDistribution:
    if T < 0:
        raise ValueError("T must be nonnegative")
    dist = None
    for dist in SetChain(chain).distributions(S0, T, state_cap):
        pass
    return SetDistribution(T, dist, chain.n)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class SetTrajectory:
    seed: int
    sets: list[int]
    uniforms: list[float]
    generator: str = GENERATOR

    def to_csv(self, path, chain: FiniteChain) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "bitmask", "pi_of_S", "uniform_drawn"])
            for t, m in enumerate(self.sets):
                pi_s = float(_bits(m, chain.n) @ chain.pi)
                u = "" if t == 0 else repr(self.uniforms[t - 1])
                w.writerow([t, m, repr(pi_s), u])


def _open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    # rng.random is on [0, 1); nudge exact zeros into the open interval.
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


def evolve_trajectory(chain: FiniteChain, S0, T: int, seed: int = 0) -> SetTrajectory:
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    us = _open_uniforms(rng, T)
    sets = [_to_int(chain, S0)]
    for u in us:
        sets.append(evolve_step(chain, sets[-1], float(u)))
    return SetTrajectory(seed, sets, [float(u) for u in us])


def sample_sets(chain: FiniteChain, S0, T: int, trials: int, seed: int = 0) -> np.ndarray:
    """Vectorized simulation; returns an array of boolean membership rows at time T."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n = chain.n
    state = np.tile(_bits(_to_int(chain, S0), n) > 0, (trials, 1))
    Q, pi = chain.flow, chain.pi
    for _ in range(T):
        live = state.any(axis=1) & ~state.all(axis=1)
        if not live.any():
            break
        u = _open_uniforms(rng, trials)
        lv = np.clip((state[live].astype(float) @ Q) / pi, 0.0, 1.0)
        state[live] = lv >= u[live, None]
    return state


# ---------------------------------------------------------------------------
# exact identity checks


def transition_identity_residuals(chain: FiniteChain, S0, T: int, set_chain: SetChain | None = None):
    """``max_y |K^t(S0,y) - pi(y)/pi(S0) P[y in S_t]|`` for ``t = 0..T``."""
    mask = _to_int(chain, S0)
    b = _bits(mask, chain.n)
    pi = chain.pi
    mass = b @ pi
    if mass <= 0:
        raise ValueError("the transition identity needs pi(S0) > 0")
    sc = set_chain or SetChain(chain)
    row = b * pi / mass  # K^0(S0, .)
    res = []
    for t, dist in enumerate(sc.distributions(mask, T)):
        if t > 0:
            row = row @ chain.matrix
        marg = SetDistribution(t, dist, chain.n).marginals()
        res.append(float(np.max(np.abs(row - pi / mass * marg))))
    return np.array(res)


def verify_transition_identity(chain: FiniteChain, S0, T: int) -> float:
    return float(transition_identity_residuals(chain, S0, T)[-1])


def verify_martingale(chain: FiniteChain, S) -> float:
    """``|E[pi(S_1)] - pi(S)|`` from the exact outcome list."""
    mask = _to_int(chain, S)
    pi = chain.pi
    expected = sum(p * (_bits(m, chain.n) @ pi) for m, p in one_step_outcomes(chain, mask))
    return float(abs(expected - _bits(mask, chain.n) @ pi))


def _smaller_side(mask: int, n: int, pi: np.ndarray) -> float:
    mass = float(_bits(mask, n) @ pi)
    return mass if mass <= 0.5 + HALF_TOL else 1.0 - mass


@dataclass
class RatioDecayCheck:
    slack: float
    expectation: float
    bound: float
    vacuous: bool = False


def verify_ratio_decay(chain: FiniteChain, S, phi: float) -> RatioDecayCheck:
    """Slack ``(1 - phi^2/2) - E[sqrt(pi(M_1)/pi(M_0))]``; should be >= 0."""
    mask = _to_int(chain, S)
    pi = chain.pi
    bound = 1.0 - phi * phi / 2.0
    m0 = _smaller_side(mask, chain.n, pi)
    if m0 <= 0:
        return RatioDecayCheck(bound, 0.0, bound, vacuous=True)
    e = 0.0
    for m, p in one_step_outcomes(chain, mask):
        m1 = max(_smaller_side(m, chain.n, pi), 0.0)
        e += p * math.sqrt(m1 / m0)
    return RatioDecayCheck(bound - e, e, bound)


# ---------------------------------------------------------------------------
# nullness bound


@dataclass
class NullnessCheck:
    C: float
    A: int
    B: int
    T: int
    S0: int
    trials: int
    estimate: float
    bound: float
    sigma: float
    exact: float | None = None
    passed: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def block_lengths(phi: float, beta: float, gamma: float, C: float) -> tuple[int, int]:
    """``A = ceil(log(sqrt(beta)/2) / log(1 - phi^2/2))`` and ``B = ceil(2C/gamma)``."""
    if not 0 < phi <= 1:
        raise ValueError("conductance must lie in (0, 1]")
    A = math.ceil(math.log(math.sqrt(beta) / 2.0) / math.log(1.0 - phi * phi / 2.0))
    B = math.ceil(2.0 * C / gamma)
    return A, B


def _absorption_exact(chain: FiniteChain, T: int, starts: list[int]) -> dict[int, float]:
    """Exact ``P[S_T in {emptyset, Omega}]`` for each start, via a dense set-chain matrix."""
    n = chain.n
    size = 1 << n
    sc = SetChain(chain)
    P = np.zeros((size, size))
    for m in range(size):
        for o, p in sc.outcomes(m):
            P[m, o] += p
    D = np.zeros((len(starts), size))
    D[np.arange(len(starts)), starts] = 1.0
    # repeated squaring on the set chain
    Pt = np.linalg.matrix_power(P, T)
    D = D @ Pt
    full = size - 1
    return {s: float(D[i, 0] + D[i, full]) for i, s in enumerate(starts)}


def worst_start(chain: FiniteChain, T: int) -> tuple[int, float | None]:
    """Start set with the smallest exact absorption probability (n <= 8),
    otherwise the most balanced set by stationary mass."""
    n = chain.n
    full = (1 << n) - 1
    if n <= 8:
        probs = _absorption_exact(chain, T, list(range(1, full)))
        s = min(probs, key=lambda m: (probs[m], m))
        return s, probs[s]
    pi = chain.pi
    best, best_gap = 1, np.inf
    for m in range(1, full):
        gap = abs(_bits(m, n) @ pi - 0.5)
        if gap < best_gap - HALF_TOL:
            best, best_gap = m, gap
    return best, None


def verify_nullness_bound(
    chain: FiniteChain,
    beta: float,
    gamma: float,
    C: float,
    trials: int,
    seed: int = 0,
    phi: float | None = None,
    S0=None,
) -> NullnessCheck:
    """Monte-Carlo check of ``P[M_{B(A+1)} = emptyset] >= 1 - e^{-C}``.

    ``M_t`` is empty exactly when ``S_t`` has been absorbed in the empty set
    or the whole space.  The check passes when the estimate is at least the
    bound minus three binomial standard errors evaluated at the bound.
    """
    if phi is None:
        from .conductance import conductance_exact

        phi = conductance_exact(chain).value
    A, B = block_lengths(phi, beta, gamma, C)
    T = B * (A + 1)
    bound = 1.0 - math.exp(-C)
    sigma = math.sqrt(bound * (1.0 - bound) / trials) if trials > 0 else math.inf
    if trials < 1 or (bound > 0 and 3.0 * sigma >= bound):
        raise ValueError(
            f"{trials} trials give a 3-sigma margin of {3 * sigma:.3g}, which swallows the bound {bound:.3g}"
        )
    notes = []
    exact = None
    if S0 is None:
        s0, exact = worst_start(chain, T)
        notes.append("start set chosen as the hardest to absorb")
    else:
        s0 = _to_int(chain, S0)
    state = sample_sets(chain, s0, T, trials, seed)
    absorbed = ~state.any(axis=1) | state.all(axis=1)
    est = float(absorbed.mean())
    passed = est >= bound - 3.0 * sigma
    return NullnessCheck(C, A, B, T, s0, trials, est, bound, sigma, exact, bool(passed), notes)
