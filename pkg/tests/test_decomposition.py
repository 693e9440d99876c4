import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liftbound import catalog
from liftbound.decomposition import (
    CertificationError,
    DecompositionError,
    Jump,
    KernelDecomposition,
    ball_decomposition,
    canonical_decomposition,
    certify_beta_gamma,
    pi_star,
    reconstruct,
    reconstruct_matrix,
    reconstruction_residual,
)

from oracles import sup_ratio_brute


def test_canonical_two_state(two):
    d = canonical_decomposition(two)
    np.testing.assert_allclose(d.alpha, [0.75, 0.75])
    assert d.jumps[0] == [Jump((1,), 1.0)]
    assert d.jumps[1] == [Jump((0,), 1.0)]


def test_canonical_complete_uniform():
    d = canonical_decomposition(catalog.complete_uniform(4))
    np.testing.assert_allclose(d.alpha, 0.25)
    for x, row in enumerate(d.jumps):
        assert sorted(j.states[0] for j in row) == [y for y in range(4) if y != x]
        np.testing.assert_allclose([j.weight for j in row], 1 / 3)


def test_canonical_identity_is_degenerate():
    d = canonical_decomposition(catalog.identity(3))
    np.testing.assert_array_equal(d.alpha, 1.0)
    assert d.jumps == [[], [], []]
    assert d.degenerate == (0, 1, 2)


def test_canonical_needs_holding():
    chain = catalog.lazy_cycle(4)
    K = chain.matrix.copy()
    K[0, 0], K[0, 1] = 0.0, 0.75
    with pytest.raises(DecompositionError):
        canonical_decomposition(type(chain).from_matrix(K))


def test_round_trip_two_state(two):
    back = reconstruct(canonical_decomposition(two), two.pi)
    np.testing.assert_allclose(back.matrix, two.matrix, atol=1e-15)


def test_ball_decomposition_reconstructs_cycle():
    K = reconstruct_matrix(ball_decomposition(4, 1), np.full(4, 0.25))
    off = K[~np.eye(4, dtype=bool)]
    np.testing.assert_allclose(off[off > 0], 0.25)
    np.testing.assert_allclose(K, catalog.lazy_cycle(4).matrix, atol=1e-15)


@pytest.mark.parametrize("n, k", [(4, 2), (8, 12), (16, 3)])
def test_ball_decomposition_matches_scaled_chain(n, k):
    chain = catalog.scaled_ball_chain(n, k)
    assert reconstruction_residual(ball_decomposition(n * k, k), chain) <= 1e-12


@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_canonical_reconstruction_identity(n, seed):
    chain = catalog.random_lazy_reversible(n, np.random.Generator(np.random.PCG64(seed)))
    d = canonical_decomposition(chain)
    assert not d.check(chain.pi)
    assert reconstruction_residual(d, chain) <= 1e-12


def test_check_flags_bad_weights():
    d = KernelDecomposition(np.array([0.5, 0.5]), [[Jump((1,), 0.7)], [Jump((0,), 1.0)]])
    assert any("sum to" in p for p in d.check([0.5, 0.5]))


def test_pi_star_examples():
    n = 16
    assert pi_star(ball_decomposition(n, 1), np.full(n, 1 / n)) == pytest.approx(2 / n)
    d = canonical_decomposition(catalog.complete_uniform(4))
    assert pi_star(d, np.full(4, 0.25)) == pytest.approx(0.25)


def test_pi_star_without_jumps():
    with pytest.raises(DecompositionError):
        pi_star(canonical_decomposition(catalog.identity(2)), [0.5, 0.5])


def test_certify_two_state(two):
    cert = certify_beta_gamma(two, 0.5)
    assert cert.gamma == pytest.approx(0.25)
    assert cert.witness_set == (0,) or cert.witness_set == (1,)
    assert cert.method == "exact"


def test_certify_vacuous(z4):
    cert = certify_beta_gamma(z4, 0.1)
    assert cert.vacuous and cert.gamma == 1.0


def test_certify_scaled_ball_chain():
    n, k = 8, 12
    chain = catalog.scaled_ball_chain(n, k)
    cert = certify_beta_gamma(chain, 1 / (12 * n), decomposition=ball_decomposition(n * k, k))
    # one state of mass 1/(kn) fits; it sends at most max(1/2, 1/(4k)) of
    # its mass to any single target
    assert cert.gamma == pytest.approx(0.5)
    assert cert.pi_star == pytest.approx(2 / n)


def test_certify_raises_when_no_gamma():
    with pytest.raises(CertificationError):
        certify_beta_gamma(catalog.identity(2), 0.5)


def test_certify_rejects_bad_beta(two):
    with pytest.raises(ValueError):
        certify_beta_gamma(two, 0.0)


@given(st.integers(2, 7), st.integers(0, 2**31 - 1), st.sampled_from([0.1, 0.25, 0.4]))
def test_certified_gamma_matches_brute_force(n, seed, beta):
    chain = catalog.random_lazy_reversible(n, np.random.Generator(np.random.PCG64(seed)))
    sup = sup_ratio_brute(chain.matrix, chain.pi, beta)
    if sup >= 1.0 - 1e-12:
        with pytest.raises(CertificationError):
            certify_beta_gamma(chain, beta)
        return
    exact = certify_beta_gamma(chain, beta)
    if exact.method == "exact":
        assert exact.sup_ratio == pytest.approx(sup, abs=1e-9)
    try:
        relaxed = certify_beta_gamma(chain, beta, mode="relaxation")
    except CertificationError:
        return
    # the relaxation over-estimates the supremum, so its gamma is conservative
    assert relaxed.sup_ratio >= sup - 1e-12


@pytest.mark.parametrize("n", [6, 9])
def test_certified_gamma_uniform_exact(n):
    chain = catalog.cycle_ball_chain(n, 2)
    for beta in (1 / n, 2 / n, 3 / n):
        cert = certify_beta_gamma(chain, beta)
        assert cert.method == "exact"
        assert cert.sup_ratio == pytest.approx(sup_ratio_brute(chain.matrix, chain.pi, beta), abs=1e-12)
