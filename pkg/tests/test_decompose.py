import numpy as np
import pytest
from hypothesis import given, strategies as st

from ozmaps import decompose as D
from ozmaps import genlab as G
from ozmaps.algebra import AlgElement, unit
from ozmaps.bounds import NotSelfAdjoint
from ozmaps.defect import jordan_defect
from ozmaps.linmap import LinMap, apply, map_norm

from conftest import rand_herm


def diag_map(weights):
    """``C^k -> C^k`` scaling coordinate ``i`` by ``weights[i]``."""
    k = len(weights)
    return LinMap([1] * k, [1] * k, np.diag(weights).astype(complex))


def test_subs_closed_form():
    rep = D.subs_check(np.diag([0.1, 0.9]), 1.0, 0.5)
    assert rep.passed and rep.context["rank"] == 1
    # eigenvalue sitting exactly on the cut is kept on both sides
    rep = D.subs_check(np.diag([0.5, 0.9]), 0.7, 0.5)
    assert rep.passed and rep.context["rank"] == 1


@given(st.integers(1, 6), st.floats(1e-3, 2.0), st.floats(0.0, 2.0), st.integers(0, 10 ** 6))
def test_subs_random(d, delta, cut, seed):
    h = rand_herm(np.random.default_rng(seed), d)
    assert D.subs_check(h, delta, cut).passed


def test_choose_beta_unit_h():
    m = G.gen_order_zero([2], 4, [2], 0, h_identity=True)
    h = apply(m, unit(m.dom))
    assert D.choose_beta(m, h, 1e-6, 1.0, 1e-3) == D.BETA_START


def test_choose_beta_invertible_kappa():
    # h = diag(0.9, 1): kappa_beta = 1 - 0.81^(2 beta) must drop below theta
    m = diag_map([0.9, 1.0])
    h = apply(m, unit(m.dom))
    theta = 1e-3
    beta = D.choose_beta(m, h, 1e-8, 1.0, theta)
    kappa = 1 - 0.81 ** (2 * beta)
    assert kappa <= theta
    assert 1 - 0.81 ** (4 * beta) > theta  # the previous, larger beta was rejected


def test_choose_beta_exhausts_on_kernel_leak():
    # h = diag(1, 0) but psi leaks into the kernel corner by 0.5, for every beta
    a = np.zeros((4, 2), dtype=complex)
    a[0, 0] = 1.0
    a[3, 0] = -0.5
    a[3, 1] = 0.5
    m = LinMap([1, 1], [2], a)
    h = apply(m, unit(m.dom))
    assert np.allclose(h.blocks[0], np.diag([1.0, 0.0]))
    with pytest.raises(D.BetaExhausted):
        D.choose_beta(m, h, 1e-8, 0.01, 1e-3)


def test_zero_map_branch():
    z = LinMap.zero([2], [3])
    res = D.decompose(z, 1e-4, 1.0)
    assert res.branch == "h_zero"
    assert not np.any(res.psi_s.action) and not np.any(res.psi_r.action)
    assert D.verify_decomposition(res, z, 1e-4, 1.0).passed


def test_small_eigenvalue_is_cut():
    eps = 1e-8
    psi = diag_map([eps ** 0.4, 1.0])
    res = D.decompose(psi, eps, 0.01)
    assert res.branch == "regular"
    # eps^0.4 <= eps^(5/16): the small eigenvalue lands in p_gamma
    assert [float(b[0, 0].real) for b in res.p_gamma.blocks] == [1.0, 0.0]
    assert np.allclose([b[0, 0] for b in res.h_gamma.blocks], [0.0, 1.0])
    assert D.verify_decomposition(res, psi, eps, 0.01).passed


@pytest.mark.parametrize("seed", range(3))
def test_regular_branch_on_exact_map(seed):
    psi = G.gen_order_zero([2], 4, [2], seed, h_range=(0.5, 1.0))
    eps, K = 1e-12, 0.01
    res = D.decompose(psi, eps, K)
    assert res.branch == "regular"
    assert res.p_gamma.norm() == 0
    assert res.bounds["measured_Xi_jordan_defect"] <= 1e-6
    assert D.verify_decomposition(res, psi, eps, K).passed
    # the small part is the damping-step residual
    hb = D._power_h2(apply(psi, unit(psi.dom)), res.beta)
    expect = psi.action - D.sandwich(psi, hb, hb).action
    assert np.allclose(res.psi_s.action, expect, atol=1e-12)


def test_exact_sum_on_perturbed_entries():
    from ozmaps.suites import sa_entry, is_positive_entry
    c = G.standard_corpus(2, n_perturbed=12, n_exact=0)
    for e in c:
        psi, eps = sa_entry(e)
        res = D.decompose(psi, eps, 0.5, is_positive_entry(e), measure=False, samples=50)
        assert np.array_equal(res.psi_s.action + res.psi_r.action, psi.action)


def test_decompose_preconditions():
    m = LinMap([1], [2], np.array([[1j], [0], [0], [0]]))
    with pytest.raises(NotSelfAdjoint):
        D.decompose(m, 1e-3, 1.0)
    with pytest.raises(ValueError):
        D.decompose(diag_map([1.0]), 0.0, 1.0)
    with pytest.raises(ValueError):
        D.decompose(diag_map([1.0]), 2.0, 1.0)


def test_small_part_and_delta_formulas():
    b = D.small_part_bounds(1.0, 1e-16, 2.0, D.GAMMA_DEFAULT, False)
    assert b["small_rhs"] == pytest.approx(19 * 1e-1)
    assert D.small_part_bounds(1.0, 1e-16, 2.0, D.GAMMA_DEFAULT, True)["small_rhs"] == pytest.approx(3.7)
    delta, c = D.delta_bound(1.0, 1e-16, 0.0, 2, True)
    assert c == 8 and delta == pytest.approx(24 * (128 + 80 + 17) * 0.1)


def test_pipeline_positive_exact():
    phi = G.gen_order_zero([1, 2], 5, [1, 2], 4, h_range=(0.5, 1.0))
    out, rep = D.pipeline_finite_dim(phi, 1e-12, 0.01, samples=50)
    assert rep.passed
    assert rep.context["positive"]
    assert map_norm(phi - out).value <= 37 * 1e-12 ** (1 / 16) * 1.1


def test_pipeline_zero_map():
    z = LinMap.zero([2], [2])
    out, rep = D.pipeline_finite_dim(z, 1e-6, 1.0)
    assert rep.passed and not np.any(out.action)


def test_pipeline_symmetrizes():
    phi = G.gen_order_zero([2], 4, [2], 5, h_range=(0.5, 1.0))
    pert, _ = G.perturb(phi, 1e-4, "general", seed=1)
    out, rep = D.pipeline_finite_dim(pert, 1e-3, 0.5, sa_eps=2e-4, positive=False, samples=50)
    sym = next(d for d in rep.details if d.inequality_id == "pipeline/symmetrization")
    assert sym.passed
    assert rep.passed


def test_sandwich_matches_pointwise():
    m = G.gen_order_zero([1, 1], 3, [1, 2], 0)
    rng = np.random.default_rng(0)
    a = AlgElement([3], [rng.standard_normal((3, 3))])
    b = AlgElement([3], [rng.standard_normal((3, 3))])
    x = G.sample_elements(m.dom, 1, "general", 1)[0]
    got = apply(D.sandwich(m, a, b), x)
    assert (got - a @ apply(m, x) @ b).norm() <= 1e-12


def test_xi_is_almost_jordan_on_unital_hom():
    psi = G.gen_order_zero([2], 4, [2], 7, h_identity=True)
    res = D.decompose(psi, 1e-12, 0.01, samples=50)
    assert jordan_defect(res.Xi).value <= 1e-9
