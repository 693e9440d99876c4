import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liftbound import catalog
from liftbound.evolving_set import (
    SetChainCapError,
    block_lengths,
    evolve_step,
    evolve_trajectory,
    one_step_outcomes,
    sample_sets,
    set_chain_distribution,
    transition_identity_residuals,
    verify_martingale,
    verify_nullness_bound,
    verify_ratio_decay,
    verify_transition_identity,
)

from oracles import set_chain_step_grid


def _random(n, seed):
    return catalog.random_lazy_reversible(n, np.random.Generator(np.random.PCG64(seed)))


@pytest.mark.parametrize("S, u, expected", [([0], 0.3, 0b01), ([0], 0.2, 0b11), ([], 0.7, 0)])
def test_evolve_step_examples(two, S, u, expected):
    assert evolve_step(two, S, u) == expected


def test_evolve_step_rejects_closed_endpoints(two):
    with pytest.raises(ValueError):
        evolve_step(two, [0], 0.0)


@given(st.integers(2, 7), st.integers(0, 2**31 - 1), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_level_set_monotone(n, seed, u, v):
    chain = _random(n, seed)
    S = int(np.random.Generator(np.random.PCG64(seed)).integers(1, 2**n - 1))
    lo, hi = sorted((u, v))
    assert evolve_step(chain, S, hi) & ~evolve_step(chain, S, lo) == 0


def test_trajectory_basics(z4):
    assert evolve_trajectory(z4, [0, 1], 0).sets == [0b11]
    a = evolve_trajectory(z4, [0, 1], 30, seed=5)
    b = evolve_trajectory(z4, [0, 1], 30, seed=5)
    assert a.sets == b.sets and a.uniforms == b.uniforms


def test_absorption_is_permanent(z4):
    traj = evolve_trajectory(z4, [0, 1], 200, seed=1)
    full = 0b1111
    hit = next(i for i, s in enumerate(traj.sets) if s in (0, full))
    assert all(s == traj.sets[hit] for s in traj.sets[hit:])


def test_optional_stopping_two_state(two):
    trials = 10**4
    final = sample_sets(two, [0], 60, trials, seed=3)
    assert np.all(final.all(axis=1) | ~final.any(axis=1))
    freq = final.all(axis=1).mean()
    assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / trials)


def test_set_chain_two_state(two):
    dist = set_chain_distribution(two, [0], 1)
    assert dist.probs == pytest.approx({0: 0.25, 0b01: 0.5, 0b11: 0.25})
    assert set_chain_distribution(two, [0], 0).probs == {0b01: 1.0}


@given(st.integers(2, 6), st.integers(0, 2**31 - 1), st.integers(0, 6))
def test_set_chain_normalized(n, seed, T):
    dist = set_chain_distribution(_random(n, seed), 1, T)
    assert dist.total() == pytest.approx(1.0, abs=1e-12)


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_outcomes_match_threshold_quadrature(n, seed):
    chain = _random(n, seed)
    S = [x for x in range(n) if (seed >> x) & 1] or [0]
    exact = dict(one_step_outcomes(chain, S))
    grid = set_chain_step_grid(chain.matrix, chain.pi, S)
    for m in set(exact) | set(grid):
        assert exact.get(m, 0.0) == pytest.approx(grid.get(m, 0.0), abs=2e-5)


def test_cap_error():
    with pytest.raises(SetChainCapError):
        set_chain_distribution(_random(8, 0), 0b1010, 6, state_cap=3)


def test_transition_identity_examples(two, z4):
    assert verify_transition_identity(two, [0], 1) <= 1e-15
    assert verify_transition_identity(two, [0], 0) == 0.0
    assert transition_identity_residuals(z4, [0, 1], 6).max() <= 1e-10


def test_transition_identity_against_matrix_power(z4):
    # independent left-hand side: K^t started from the restricted law
    pi = z4.pi
    start = np.array([0.5, 0.5, 0, 0])
    dist = set_chain_distribution(z4, [0, 1], 5)
    lhs = start @ np.linalg.matrix_power(z4.matrix, 5)
    np.testing.assert_allclose(lhs, pi / 0.5 * dist.marginals(), atol=1e-12)


def test_martingale_examples(two):
    assert verify_martingale(two, [0]) <= 1e-16
    assert verify_martingale(two, []) == 0.0


@given(st.integers(2, 10), st.integers(0, 2**31 - 1))
def test_martingale_random(n, seed):
    chain = _random(n, seed)
    S = int(np.random.Generator(np.random.PCG64(seed)).integers(0, 2**n))
    assert verify_martingale(chain, S) <= 1e-12


def test_ratio_decay_two_state(two):
    check = verify_ratio_decay(two, [0], 0.25)
    assert check.expectation == pytest.approx(0.5)
    assert check.slack == pytest.approx(0.46875)


def test_ratio_decay_complete_uniform_half():
    chain = catalog.complete_uniform(4)
    check = verify_ratio_decay(chain, [0, 1], 0.5)
    # levels are all 1/2: S_1 is empty or everything, so M_1 is empty
    assert check.expectation == pytest.approx(0.0)
    assert check.slack >= 0


@pytest.mark.parametrize("seed", range(5))
def test_ratio_decay_exhaustive(seed):
    from liftbound.conductance import conductance_exact

    chain = _random(7, seed)
    phi = conductance_exact(chain).value
    for S in range(1, 2**7 - 1):
        assert verify_ratio_decay(chain, S, phi).slack >= -1e-12


def test_block_lengths():
    A, B = block_lengths(0.25, 0.5, 0.25, 1.0)
    assert A == math.ceil(math.log(math.sqrt(0.5) / 2) / math.log(1 - 0.25**2 / 2))
    assert B == 8


def test_nullness_two_state(two):
    check = verify_nullness_bound(two, beta=0.5, gamma=0.25, C=1.0, trials=2000, seed=0)
    assert check.passed
    assert check.estimate >= 1 - math.exp(-1) - 3 * check.sigma


def test_nullness_small_c(two):
    check = verify_nullness_bound(two, beta=0.5, gamma=0.25, C=1e-3, trials=10**5, seed=0)
    assert check.bound == pytest.approx(1 - math.exp(-1e-3))
    assert check.passed


def test_nullness_refuses_too_few_trials(two):
    with pytest.raises(ValueError):
        verify_nullness_bound(two, beta=0.5, gamma=0.25, C=1e-3, trials=10, seed=0)


@pytest.mark.slow
def test_nullness_z8():
    chain = catalog.lazy_cycle(8)
    check = verify_nullness_bound(chain, beta=1 / 8, gamma=0.5, C=2.0, trials=10**5, seed=0)
    assert check.passed
    assert check.exact is not None and check.exact >= check.bound


def test_sampled_marginals_match_exact(z4):
    trials, T = 20000, 4
    final = sample_sets(z4, [0, 1], T, trials, seed=11)
    exact = set_chain_distribution(z4, [0, 1], T).marginals()
    sigma = np.sqrt(exact * (1 - exact) / trials)
    assert np.all(np.abs(final.mean(axis=0) - exact) <= 4 * sigma + 1e-12)
