import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liftbound import catalog
from liftbound.chain import ChainError, FiniteChain, mixing_time
from liftbound.conductance import conductance_exact
from liftbound.lifting import (
    LiftedChain,
    dhn_lifted_cycle,
    verify_conductance_contraction,
    verify_lift,
)

from oracles import conductance_brute, stationary_eig


def _identity_lift(chain):
    return LiftedChain(chain, chain, np.arange(chain.n))


def test_identity_lift(z4):
    check = verify_lift(_identity_lift(z4))
    assert check.passed
    assert check.lift_residual == 0.0 and check.marginal_residual == 0.0


def test_dhn_entries_and_stationary():
    lift = dhn_lifted_cycle(4)
    K = lift.hat.matrix
    a, b = lift.hat.index("0+"), lift.hat.index("1+")
    assert K[a, b] == pytest.approx(0.375)
    np.testing.assert_allclose(stationary_eig(K), np.full(8, 1 / 8), atol=1e-12)


def test_dhn_fiber_sum_by_hand():
    lift = dhn_lifted_cycle(4)
    K, pih = lift.hat.matrix, lift.hat.pi
    fiber1 = [lift.hat.index("1+"), lift.hat.index("1-")]
    total = sum(pih[lift.hat.index(x)] * K[lift.hat.index(x), fiber1].sum() for x in ("0+", "0-"))
    assert total == pytest.approx(1 / 16)
    assert total == pytest.approx(lift.base.flow[0, 1])
    assert verify_lift(lift).passed


def test_perturbed_lift_fails():
    lift = dhn_lifted_cycle(4)
    K = lift.hat.matrix.copy()
    K[0, 0] -= 1e-3
    K[0, 1] += 1e-3
    hat = FiniteChain.from_matrix(K, states=lift.hat.states, stationary=lift.hat.pi)
    check = verify_lift(LiftedChain(hat, lift.base, lift.projection))
    assert not check.passed
    assert check.lift_residual == pytest.approx(1e-3 / 8, rel=1e-6)


@pytest.mark.parametrize("n", [3, 5, 8, 13])
def test_dhn_is_a_lift(n):
    assert verify_lift(dhn_lifted_cycle(n)).passed


def test_dhn_small_n():
    with pytest.raises(ValueError):
        dhn_lifted_cycle(2)


def test_empty_fiber_rejected(z4):
    two = catalog.two_state()
    with pytest.raises(ChainError):
        verify_lift(LiftedChain(two, z4, np.array([0, 1])))


def test_projection_must_be_total(z4):
    with pytest.raises(ChainError):
        LiftedChain.from_labels(z4, z4, {"0": "0"})


def test_lift_speeds_up_mixing():
    n = 64
    assert mixing_time(dhn_lifted_cycle(n).hat) < mixing_time(catalog.lazy_cycle(n)) / 2


def test_contraction_exact_z8():
    lift = dhn_lifted_cycle(8)
    check = verify_conductance_contraction(lift)
    assert check.phi_hat_method == "exact" and check.verdict == "pass"
    assert check.phi_hat == pytest.approx(conductance_brute(lift.hat.matrix, lift.hat.pi), abs=1e-12)
    assert check.phi_hat <= check.phi + 1e-12


def test_contraction_identity(z4):
    check = verify_conductance_contraction(_identity_lift(z4))
    assert check.phi_hat == pytest.approx(check.phi)
    assert check.verdict == "pass"


def test_contraction_large_lift_reports_both():
    check = verify_conductance_contraction(dhn_lifted_cycle(64))
    assert check.phi_hat_method == "upper_bound" and check.phi_method == "heuristic"
    assert check.verdict == "inconclusive"
    assert check.phi_hat > 0 and check.phi > 0


@given(st.integers(3, 7), st.integers(0, 2**31 - 1))
def test_pulled_back_witness_keeps_conductance(n, seed):
    # splitting each state in two copies with the same rows is a lift
    base = catalog.random_lazy_reversible(n, np.random.Generator(np.random.PCG64(seed)))
    K = base.matrix
    Kh = np.block([[K / 2, K / 2], [K / 2, K / 2]])
    hat = FiniteChain.from_matrix(Kh, stationary=np.concatenate([base.pi, base.pi]) / 2)
    lift = LiftedChain(hat, base, np.concatenate([np.arange(n), np.arange(n)]))
    assert verify_lift(lift).passed
    cut = conductance_exact(base)
    from liftbound.conductance import set_conductance

    assert set_conductance(hat, lift.pullback(cut.witness)) == pytest.approx(cut.value, abs=1e-12)
