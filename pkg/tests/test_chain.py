import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liftbound import catalog
from liftbound.chain import (
    ChainError,
    FiniteChain,
    NotMixedError,
    ReducibleChainError,
    mixing_profile,
    mixing_time,
    restrict,
    stationary_distribution,
    step_power,
    tv_distance,
    validate,
)

from oracles import mixing_time_powers, stationary_eig


def test_validate_two_state(two):
    rep = validate(two)
    assert rep.valid
    assert rep.laziness == 0.75
    assert rep.reversible


def test_validate_reports_row_sum():
    chain = FiniteChain.from_matrix([[0.6, 0.5], [0.25, 0.75]], stationary=[0.5, 0.5])
    rep = validate(chain)
    assert not rep.valid
    assert any("row 0 sums to 1.1" in v for v in rep.violations)


def test_validate_identity():
    rep = validate(catalog.identity(3))
    assert rep.valid and rep.laziness == 1.0 and rep.reversible


def test_validate_rejects_wrong_stationary():
    chain = FiniteChain.from_matrix([[0.9, 0.1], [0.3, 0.7]], stationary=[0.5, 0.5])
    assert not validate(chain).valid


def test_nan_entries_raise():
    chain = FiniteChain.from_matrix([[np.nan, 1.0], [0.5, 0.5]])
    with pytest.raises(ChainError):
        validate(chain)


def test_shape_and_label_errors():
    with pytest.raises(ChainError):
        FiniteChain.from_matrix(np.ones((2, 3)) / 3)
    with pytest.raises(ChainError):
        FiniteChain.from_matrix(np.eye(2), states=["a", "a"])


@pytest.mark.parametrize(
    "matrix, expected",
    [
        ([[0.75, 0.25], [0.25, 0.75]], [0.5, 0.5]),
        ([[0.9, 0.1], [0.3, 0.7]], [0.75, 0.25]),
    ],
)
def test_stationary_examples(matrix, expected):
    np.testing.assert_allclose(stationary_distribution(matrix), expected, atol=1e-14)


def test_stationary_lazy_z4(z4):
    np.testing.assert_allclose(stationary_distribution(z4.matrix), np.full(4, 0.25), atol=1e-14)


def test_stationary_reducible_raises():
    K = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.5, 0.5]])
    with pytest.raises(ReducibleChainError):
        stationary_distribution(K)


@given(st.integers(2, 9), st.integers(0, 2**31 - 1))
def test_stationary_matches_eigenvector(n, seed):
    chain = catalog.random_lazy_reversible(n, np.random.Generator(np.random.PCG64(seed)))
    got = stationary_distribution(chain.matrix)
    np.testing.assert_allclose(got, stationary_eig(chain.matrix), atol=1e-10)
    np.testing.assert_allclose(got @ chain.matrix, got, atol=1e-12)
    np.testing.assert_allclose(got, chain.pi, atol=1e-12)


def test_step_power_examples(two):
    np.testing.assert_array_equal(step_power(two, 0), np.eye(2))
    np.testing.assert_allclose(step_power(two, 2), [[0.625, 0.375], [0.375, 0.625]], atol=1e-15)
    np.testing.assert_array_equal(step_power(two, 1), two.matrix)


@pytest.mark.parametrize(
    "mu, nu, expected",
    [
        ([1.0, 0.0], [0.5, 0.5], 0.5),
        ([0.3, 0.7], [0.3, 0.7], 0.0),
        ([0.75, 0.25], [0.5, 0.5], 0.25),
    ],
)
def test_tv_examples(mu, nu, expected):
    assert tv_distance(mu, nu) == pytest.approx(expected, abs=1e-15)


def test_tv_length_mismatch():
    with pytest.raises(ChainError):
        tv_distance([1.0], [0.5, 0.5])


def test_mixing_two_state_boundary(two):
    prof = mixing_profile(two, 0.25)
    assert prof.tau == 2
    np.testing.assert_allclose(prof.trace, [0.5, 0.25, 0.125])


def test_mixing_complete_uniform():
    assert mixing_time(catalog.complete_uniform(5)) == 1


def test_identity_never_mixes():
    with pytest.raises(NotMixedError):
        mixing_profile(catalog.identity(3), 0.25)


def test_cap_error():
    with pytest.raises(NotMixedError):
        mixing_time(catalog.lazy_cycle(16), cap=5)


def test_lazy_cycle_ratio():
    assert 3.5 <= mixing_time(catalog.lazy_cycle(16)) / mixing_time(catalog.lazy_cycle(8)) <= 4.5


@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_mixing_time_matches_all_start_powers(n, seed):
    chain = catalog.random_lazy_reversible(n, np.random.Generator(np.random.PCG64(seed)))
    assert mixing_time(chain) == mixing_time_powers(chain.matrix, chain.pi)


@pytest.mark.parametrize("n", [5, 8, 12])
def test_circulant_shortcut_agrees(n):
    chain = catalog.cycle_ball_chain(n, 2)
    assert mixing_time(chain) == mixing_time_powers(chain.matrix, chain.pi)


@pytest.mark.parametrize(
    "mu, S, expected",
    [
        ([0.25] * 4, [0, 1], [0.5, 0.5, 0, 0]),
        ([1.0, 0, 0], [0], [1.0, 0, 0]),
        ([0.1, 0.2, 0.3, 0.4], [1, 3], [0, 1 / 3, 0, 2 / 3]),
    ],
)
def test_restrict_examples(mu, S, expected):
    np.testing.assert_allclose(restrict(mu, S), expected, atol=1e-15)


def test_restrict_null_set():
    with pytest.raises(ChainError):
        restrict([1.0, 0.0], [1])
