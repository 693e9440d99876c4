"""Character-sum mixing bound and a diffusive lower-bound check for the
uniform-ball walk on the unit torus."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

TAIL_REL_TOL = 1e-12
MAX_TRUNCATION = 10**7
CHUNK = 1 << 20
TV_THRESHOLD = 0.25


@dataclass
class FourierBound:
    c: float
    T: int
    value: float
    partial: float
    tail: float
    truncation: int
    converged: bool


def _check_c(c: float) -> None:
    if not 0 < c < 0.25:
        raise ValueError(f"need 0 < c < 1/4, got {c}")


def _partial_sum(c: float, T: int, M: int) -> float:
    total = 0.0
    for start in range(1, M + 1, CHUNK):
        n = np.arange(start, min(start + CHUNK, M + 1), dtype=float)
        z = 2.0 * np.pi * n * c
        total += float(np.sum(np.abs(np.sin(z) / z) ** T))
    return total


def _tail(c: float, T: int, M: int) -> float:
    # sum_{n > M} (2 pi n c)^{-T} <= (2 pi c)^{-T} M^{1-T} / (T - 1)
    return math.exp(-T * math.log(2 * math.pi * c) + (1 - T) * math.log(M)) / (T - 1)


def fourier_mixing_bound(c: float, T: int, truncation: int = 10**5) -> FourierBound:
    """``(1/4) sum_{n >= 1} |sin(2 pi n c) / (2 pi n c)|^T`` with a rigorous tail.

    The truncation grows tenfold until the tail is below 1e-12 of the sum
    or the cap is reached; the tail estimate is always added, so the value
    stays an upper bound either way.
    """
    _check_c(c)
    if T < 1:
        raise ValueError("T must be at least 1")
    if T == 1:
        return FourierBound(c, T, math.inf, math.inf, math.inf, truncation, False)
    M = int(truncation)
    while True:
        partial = _partial_sum(c, T, M)
        tail = _tail(c, T, M)
        if tail <= TAIL_REL_TOL * partial or M >= MAX_TRUNCATION:
            break
        M = min(M * 10, MAX_TRUNCATION)
    converged = tail <= TAIL_REL_TOL * partial
    return FourierBound(c, T, 0.25 * (partial + tail), 0.25 * partial, 0.25 * tail, M, converged)


def minimal_T(c: float, truncation: int = 10**5) -> int:
    """Smallest ``T`` with bound below 1/4, by doubling then bisection."""
    _check_c(c)

    def ok(T):
        return fourier_mixing_bound(c, T, truncation).value < TV_THRESHOLD

    hi = 2
    while not ok(hi):
        hi *= 2
    lo = hi // 2  # ok(lo) is false (or lo == 1, where the bound is infinite)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _jump_tv_bounds(c: float, J: int, truncation: int) -> np.ndarray:
    """``d_j >= TV(mu^{*j}, U)`` for ``j = 0..J`` from the upper-bound lemma."""
    d = np.ones(J + 1)
    for j in range(1, J + 1):
        s = _partial_sum(c, 2 * j, truncation) + _tail(c, 2 * j, truncation)
        d[j] = min(1.0, 0.5 * math.sqrt(2.0 * s))
    return d


def upper_bound_lemma_tv(c: float, T: int, lazy: bool = True, truncation: int = 10**5) -> float:
    """Rigorous TV bound at time ``T`` for the jump walk or the lazy walk.

    The jump walk uses ``TV(mu^{*T}, U) <= (1/2) sqrt(sum_{n != 0} sinc^{2T})``.
    The lazy walk is the binomial mixture of jump-walk powers, so its TV is
    at most the binomial average of those bounds.
    """
    _check_c(c)
    d = _jump_tv_bounds(c, T, truncation)
    if not lazy:
        return float(d[T])
    return float(binom.pmf(np.arange(T + 1), T, 0.5) @ d)


def upper_bound_lemma_T(c: float, lazy: bool = True, truncation: int = 10**5) -> int:
    """Smallest ``T`` whose :func:`upper_bound_lemma_tv` value is below 1/4."""
    _check_c(c)

    def ok(T):
        return upper_bound_lemma_tv(c, T, lazy, truncation) < TV_THRESHOLD

    hi = 1
    while not ok(hi):
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class DiffusiveCheck:
    c: float
    A_c: float
    T: int
    trials: int
    estimate: float
    sigma: float
    bound: float
    passed: bool
    seed: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def diffusive_bound(c: float, A_c: float) -> float:
    return 2.0 * math.exp(-(3.0 / (2.0 * A_c)) / (30.0 + c))


def diffusive_lower_check(
    c: float, A_c: float, trials: int = 10**5, seed: int = 0, sigma_target: float = 0.01
) -> DiffusiveCheck:
    """Estimate ``P[|X_T| > 1/10]`` for the lazy walk from 0 at ``T = A_c / c^2``.

    ``T`` is rounded to the nearest integer (at least 1).  The check passes
    when the estimate is at most the Bernstein bound plus three standard
    errors.
    """
    _check_c(c)
    if not A_c > 0:
        raise ValueError("A_c must be positive")
    if 0.5 / math.sqrt(trials) > sigma_target:
        raise ValueError(
            f"{trials} trials cannot reach a standard error of {sigma_target}; "
            f"need at least {math.ceil((0.5 / sigma_target) ** 2)}"
        )
    T = max(1, int(round(A_c / (c * c))))
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.zeros(trials)
    for _ in range(T):
        move = rng.random(trials) < 0.5
        x += np.where(move, rng.uniform(-c, c, size=trials), 0.0)
    r = np.mod(x, 1.0)
    dist = np.minimum(r, 1.0 - r)
    p = float(np.mean(dist > 0.1))
    sigma = math.sqrt(max(p * (1 - p), 1e-300) / trials)
    bound = diffusive_bound(c, A_c)
    return DiffusiveCheck(c, A_c, T, trials, p, sigma, bound, p <= bound + 3 * sigma, seed)
