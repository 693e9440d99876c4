"""Named chains used throughout the tests, the CLI and the experiments."""

from __future__ import annotations

import numpy as np

from .chain import FiniteChain


def two_state() -> FiniteChain:
    return FiniteChain.from_matrix([[0.75, 0.25], [0.25, 0.75]], stationary=[0.5, 0.5])


def complete_uniform(n: int) -> FiniteChain:
    return FiniteChain.from_matrix(np.full((n, n), 1.0 / n), stationary=np.full(n, 1.0 / n))


def identity(n: int) -> FiniteChain:
    return FiniteChain.from_matrix(np.eye(n), stationary=np.full(n, 1.0 / n))


def cycle_ball_chain(n_states: int, k: int, hold: float = 0.5) -> FiniteChain:
    """Lazy walk on Z_m jumping uniformly to one of the 2k nearest neighbours."""
    if k < 1 or 2 * k >= n_states:
        raise ValueError("need 1 <= k and 2k < number of states")
    K = np.zeros((n_states, n_states))
    jump = (1.0 - hold) / (2 * k)
    for x in range(n_states):
        K[x, x] = hold
        for d in range(1, k + 1):
            K[x, (x + d) % n_states] += jump
            K[x, (x - d) % n_states] += jump
    return FiniteChain.from_matrix(K, stationary=np.full(n_states, 1.0 / n_states))


def lazy_cycle(n: int) -> FiniteChain:
    """Hold 1/2, step to each neighbour with probability 1/4."""
    return cycle_ball_chain(n, 1)


def scaled_ball_chain(n: int, k: int) -> FiniteChain:
    """Walk on Z_{kn} with holding 1/2 and off-diagonal mass 1/(4k) within distance k.

    This is the row-stochastic version implied by the holding-plus-ball
    decomposition (the literal 1/(2k) off-diagonal weights sum rows to 3/2).
    """
    return cycle_ball_chain(k * n, k)


def random_lazy_reversible(n: int, rng: np.random.Generator, density: float = 0.7) -> FiniteChain:
    """Random 1/2-lazy reversible chain from a connected random weighted graph.

    ``K = (I + D^{-1} W) / 2`` for a symmetric weight matrix ``W`` whose
    support always contains a Hamiltonian path, so the chain is irreducible.
    ``pi`` is proportional to the weighted degree.
    """
    W = np.zeros((n, n))
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        W[a, b] = W[b, a] = rng.uniform(0.1, 1.0)
    for a in range(n):
        for b in range(a + 1, n):
            if W[a, b] == 0 and rng.random() < density:
                W[a, b] = W[b, a] = rng.uniform(0.1, 1.0)
    deg = W.sum(axis=1)
    K = 0.5 * np.eye(n) + 0.5 * W / deg[:, None]
    # pi proportional to degree satisfies detailed balance exactly.
    pi = deg / deg.sum()
    return FiniteChain.from_matrix(K, stationary=pi, reversible=True)
