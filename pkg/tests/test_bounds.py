import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from ozmaps import bounds as B
from ozmaps import genlab as G
from ozmaps.algebra import AlgElement, unit
from ozmaps.linmap import LinMap, apply
from ozmaps.suites import commutative_surjection

from conftest import rand_psd

C17 = 17 ** 2 / 3 + 1


def oracle_xi(t, n=10 ** 6):
    """Direct bilateral sums over k in [-n, n] minus {0, 1}, no tail term."""
    k = np.concatenate([np.arange(-n, 0), np.arange(2, n + 1)]).astype(float)
    a = (abs(2 * math.sin(t) + t * (1 - math.cos(t))) / (2 * math.pi)
         + abs(t + 2 * (1 - math.cos(t)) / t * math.cos(t)) / math.pi)
    b = abs((1 - np.exp(1j * t)) / t) * np.sum(np.abs(1 - np.exp(1j * k * t)) / (math.pi * k * k))
    g = np.sum(np.abs(np.sin((1 - k) * t)) / (math.pi * np.abs(k * (k - 1))))
    return a + b + g


def oracle_zeta(s):
    return oracle_xi(8 * math.pi / (math.sqrt(3 * (C17 * s ** -0.25 - 1)) - 1))


# frozen from oracle_zeta
ZETA_ORACLE = {
    1e-12: 0.2926159958527304,
    1e-8: 0.7101896993761485,
    1e-4: 1.5466041899758582,
    1e-3: 1.812111599820749,
}
ETA_ORACLE = 52.44421110603757  # eps = 1e-8, ||phi|| = 1
# both tails together add at most 8 / (pi n); allow twice that for the oracle's own truncation
TAIL = 16 / (math.pi * 10 ** 6)


@pytest.mark.parametrize("s", [1e-12, 1e-4])
def test_oracle_reproduces_frozen(s):
    assert oracle_zeta(s) == pytest.approx(ZETA_ORACLE[s], rel=1e-12)


@pytest.mark.parametrize("s,ref", sorted(ZETA_ORACLE.items()))
def test_zeta_matches_oracle(s, ref):
    z = B.zeta(s)
    # upper-bound semantics: never below the untailed oracle
    assert 0 <= z - ref <= TAIL


def test_zeta_zero_and_domain():
    assert B.zeta(0.0) == 0.0
    for bad in (-1e-3, math.inf, math.nan):
        with pytest.raises(B.DomainError):
            B.zeta(bad)
    # inner root must exceed 1; for huge s it does not
    with pytest.raises(B.DomainError):
        B.zeta(1e9)
    with pytest.raises(B.DomainError):
        B.zeta(1e-9, B.ZetaParams(domain_floor=1e-6))


def test_zeta_ratio_bounded_and_tail_stable():
    grid = np.geomspace(1e-12, 1e-3, 8)
    r1 = [B.zeta(s) / s ** (1 / 16) for s in grid]
    r2 = [B.zeta(s, B.ZetaParams(tail_cutoff=10 ** 7)) / s ** (1 / 16) for s in grid]
    assert max(r1) < 10
    assert abs(max(r1) - max(r2)) / max(r1) < 0.05


@pytest.mark.parametrize("s", [1e-8, 1e-6, 1e-4, 1e-2])
def test_xi_B_sqrt_bound(s):
    assert B.xi_B(s) <= (4 / math.pi + math.pi / 3) * math.sqrt(s)


def test_eta_matches_oracle():
    v = B.eta(1e-8, 1.0)
    scale = 4 * C17 ** 2 * math.sqrt(16 * 1e-8) + 16
    assert 0 <= v - ETA_ORACLE <= scale * TAIL


def test_eta_domain():
    with pytest.raises(B.DomainError):
        B.eta(-1.0, 1.0)
    with pytest.raises(B.DomainError):
        B.eta(1e-2, 0.05)


def test_theta_linear_and_quadratic():
    h = np.diag([0.5, 0.25]).astype(complex)
    eps = 1e-3
    assert B.theta([3.0, -2.0], h, 1.0, eps) == pytest.approx(16 * eps)
    m = 1.7
    assert B.theta([0, 0, 1], h, m, eps) == pytest.approx(64 * m * eps + 8 * 0.5 * eps)
    with pytest.raises(B.DegreeZero):
        B.theta([1.0], h, 1.0, eps)
    with pytest.raises(B.DegreeZero):
        B.theta([2.0, 0.0, 0.0], h, 1.0, eps)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 2))
def test_theta_linear_in_eps(a, b, t):
    h = np.diag([0.3, 0.9]).astype(complex)
    c = [0.0, a, b]
    if a == 0 and b == 0:
        return
    assert B.theta(c, h, 1.2, t * 1e-3) == pytest.approx(t * B.theta(c, h, 1.2, 1e-3), abs=1e-15)


def test_alg_const_values():
    assert B.alg_const(2, 5.0) == 8
    assert B.alg_const(3, 1.0) == 72
    assert B.alg_const(3, 2.0) == 136
    for bad in (1, 0, 2.5):
        with pytest.raises(B.BadDegree):
            B.alg_const(bad, 1.0)


def test_circle_sup_upper_dominates():
    c = [0, 1, -0.5, 0.25]
    zs = 0.8 * np.exp(2j * np.pi * np.random.default_rng(0).random(2000))
    true = np.max(np.abs(np.polyval(np.array(c)[::-1], zs)))
    assert B.circle_sup_upper(c, 0.8) >= true
    assert B.circle_sup(c, 0.8) <= B.circle_sup_upper(c, 0.8)


@pytest.mark.parametrize("seed", range(3))
def test_checks_on_exact_maps(seed):
    m = G.gen_order_zero([1, 2], 5, [1, 2], seed)
    eps = 1e-12
    for rep in (B.check_oz_extensions(m, eps, samples=50, seed=seed),
                B.check_almost_jordan(m, eps, samples=50, seed=seed),
                B.check_comm_theta(m, [0, 1], eps, samples=50, seed=seed),
                B.check_comm_theta(m, [0, 0, 1], eps, samples=50, seed=seed),
                B.check_alg_comm(m, [0, 1], eps, samples=50, seed=seed)):
        assert rep.passed, rep.inequality_id
        assert rep.lhs <= 1e-8


def test_almost_jordan_detects_broken_map():
    # transpose-plus-identity is far from order zero; passing it a tiny eps must fail
    t = np.zeros((4, 4), dtype=complex)
    for i, j in product(range(2), repeat=2):
        t[j * 2 + i, i * 2 + j] = 1
    m = LinMap([2], [2], t + np.eye(4))
    assert not B.check_almost_jordan(m, 1e-6, samples=50).passed


def test_unital_extension_hypothesis():
    m = G.gen_order_zero([2], 4, [2], 0)
    h = apply(m, unit(m.dom))
    rep = B.check_unital_extension(m, h, 1e-9)
    assert rep.passed
    skew = AlgElement([4], [1j * np.eye(4)])
    with pytest.raises(B.HypothesisFailed):
        B.check_unital_extension(m, h + skew, 1e-3)


def test_sp_proj_two_point_passes():
    s = np.diag([1.0, -1.0]).astype(complex)
    t = np.array([[0, 1], [0, 0]], dtype=complex)
    rep = B.check_sp_proj(s, t)
    assert rep.passed
    assert rep.lhs == pytest.approx(1.0)


def test_sp_proj_three_point_counterexample():
    # documented failure: polynomial commutators are ~0.2 but a spectral projection gives 1
    s = np.diag([1.0, 0.1, -0.1]).astype(complex)
    t = np.zeros((3, 3), dtype=complex)
    t[1, 2] = 1
    rep = B.check_sp_proj(s, t)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.rhs < 0.25
    assert not rep.passed


def test_sp_proj_too_many_eigenvalues():
    with pytest.raises(B.TooManyEigenvalues):
        B.check_sp_proj(np.diag(np.arange(1, 15)).astype(complex), np.eye(14))


def test_hereditary_exact_map_passes():
    m = G.gen_order_zero([2], 4, [2], 3)
    rep = B.check_hereditary_distance(m, 1e-12, K=1.0, samples=6)
    dist = next(d for d in rep.details if d.inequality_id == "hereditary/distance")
    assert dist.passed


def test_hereditary_scaled_identity_counterexample():
    # documented failure: the d-factor budget does not scale with ||psi||
    rep = B.check_hereditary_distance(LinMap([2], [2], 17 * np.eye(4, dtype=complex)), 1e-12, K=1.0, samples=6)
    failing = {d.inequality_id for d in rep.details if not d.passed}
    assert "hereditary/d-norm" in failing
    assert not rep.passed


def test_estimate_K_empty_and_exact():
    with pytest.raises(B.EmptyCorpus):
        B.estimate_K([])
    m = G.gen_order_zero([2], 4, [2], 0)
    assert B.estimate_K([(m, 0.0)]) == 0.0


def test_dichotomy_positive_branch():
    m = G.gen_order_zero([2], 4, [2], 0)
    rep = B.check_dichotomy(m, 1e-12, K=1.0, positive=True)
    assert rep.passed
    assert rep.context["branch"] == "dichotomy/b'"


@given(st.integers(1, 5), st.sampled_from([1 / 5, 1 / 3, 1 / 2]), st.integers(0, 10 ** 6))
def test_bks_random(d, alpha, seed):
    rng = np.random.default_rng(seed)
    a = rand_psd(rng, d, rank=int(rng.integers(1, d + 1)))
    b = rand_psd(rng, d)
    assert B.check_bks(a, b, alpha).passed


def test_bks_rejects_alpha():
    with pytest.raises(ValueError):
        B.check_bks(np.eye(2), np.eye(2), 1.5)


def test_gaur_kovarik_sharp_point():
    rep = B.check_gaur_kovarik([2.0], -1.0)
    assert rep.lhs == 3 and rep.rhs == 3 and rep.passed
    assert B.check_gaur_kovarik([-2.0], 1.0).context["ratio"] == pytest.approx(3.0)
    ratio, x, a = B.gk_grid_search()
    assert ratio == pytest.approx(3.0)
    with pytest.raises(B.NotSelfAdjoint):
        B.check_gaur_kovarik([1j], 0.5)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.floats(-5, 5))
def test_gaur_kovarik_holds(x, a):
    assert B.check_gaur_kovarik(x, a).passed


def test_openness_known_values():
    diag = LinMap([1, 1, 1], [1, 1, 1], np.diag([1.0, 0.5, 0.25]).astype(complex))
    assert B.openness_index(diag) == pytest.approx(4.0)
    half = LinMap([1, 1], [1, 1], 0.5 * np.eye(2, dtype=complex))
    assert B.openness_index(half) == pytest.approx(2.0)


def _brute_openness(m, n_phase=24):
    """Independent estimate: dense phase grid, exact-modulus epigraph solved by SLSQP."""
    zs = m.action
    h = apply(m, unit(m.dom)).dense()
    w = np.real(np.diag(h))
    lam = np.unique(np.round(w[np.abs(w) > 1e-12], 10))
    qs = np.stack([(np.abs(w - v) < 1e-9).astype(complex) for v in lam], axis=1)
    part, *_ = np.linalg.lstsq(zs, qs, rcond=None)
    _, s, vh = np.linalg.svd(zs)
    null = vh[np.sum(s > 1e-12):].conj().T
    k = null.shape[1]
    best = 0.0
    ph = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    for combo in product(range(n_phase), repeat=len(lam) - 1):
        c0 = part @ np.concatenate([[1.0], ph[list(combo)]])

        def cons(v):
            z = c0 + null @ (v[:k] + 1j * v[k:2 * k])
            return v[-1] ** 2 - np.abs(z) ** 2
        x0 = np.concatenate([np.zeros(2 * k), [np.max(np.abs(c0))]])
        res = minimize(lambda v: v[-1], x0, method="SLSQP", constraints=[{"type": "ineq", "fun": cons}],
                       options={"ftol": 1e-12, "maxiter": 200})
        t = res.x[:k] + 1j * res.x[k:2 * k]
        best = max(best, float(np.max(np.abs(c0 + null @ t))))
    return best


def test_openness_net_against_brute_force():
    m = commutative_surjection(4, 3, 1e-2, 11)
    net = B.openness_index(m, certified=False)
    cert = B.openness_index(m)
    oracle = _brute_openness(m)
    assert abs(net - oracle) <= 0.05 * oracle
    assert cert >= net


def test_openness_requires_center_range():
    m = LinMap([2], [2], np.eye(4, dtype=complex) + 0.1 * np.ones((4, 4)))
    h = AlgElement([2], [np.diag([1.0, 0.5]).astype(complex)])
    with pytest.raises(B.HypothesisFailed):
        B.openness_index(m, h)


def test_reports_serialise():
    rep = B.combine("top", [B.make_report("a", 1.0, 2.0), B.make_report("b", 3.0, 2.0)])
    assert not rep.passed
    d = rep.to_dict()
    assert d["inequality_id"] == "top" and len(d["details"]) == 2
    w = B.worst_report("w", [0.1, 0.5], [1.0, 1.0])
    assert w.lhs == 0.5 and w.passed
