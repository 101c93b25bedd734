"""Splitting a self-adjoint approximately order-zero map into a small part and a
corner part that becomes approximately Jordan after normalization.

Outline of :func:`decompose` (algebraic ``h = psi(1)``):

1. pick ``beta`` so that ``x -> (h^2)^beta psi(x) (h^2)^beta`` is close to ``psi``;
2. cut away the spectral subspace ``|h| <= eps^gamma``;
3. the compressed map ``psi_r`` lives in the complementary corner, where
   ``h_gamma = psi_r(1)`` is invertible;
4. ``Xi = h_gamma^{-1} psi_r`` is the normalized corner map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matcore as mc
from .algebra import AlgElement, unit
from .bounds import (LESSSIM_SLACK, CheckReport, NotSelfAdjoint, alg_const, combine, degree_of_algebraicity,
                     make_report, sample_batch, _batch_norm, _vecs)
from .defect import jordan_defect, sa_defect
from .linmap import LinMap, apply, apply_batch, is_completely_positive, is_self_adjoint, map_norm, norm_upper, \
    selfadjointify

GAMMA_DEFAULT = 5 / 16
BETA_START = 1 / 40
BETA_FLOOR = 2.0 ** -40
BRANCHES = ("h_zero", "dichotomy_small", "h_small", "norm_small", "regular")


class BetaExhausted(RuntimeError):
    pass


@dataclass
class DecompositionResult:
    psi_s: LinMap
    psi_r: LinMap
    p_gamma: AlgElement
    beta: float | None
    gamma: float
    theta_slack: float | None
    h_gamma: AlgElement
    Xi: LinMap | None
    branch: str
    bounds: dict = field(default_factory=dict)
    log: list = field(default_factory=list)


# ---------------------------------------------------------------------------

def subs_check(h, delta: float, eps_cut: float) -> CheckReport:
    """Spectral cut of ``h`` at ``eps`` versus cut of ``h|h|^delta`` at ``eps^(1+delta)``."""
    h = mc.hermitize(h)
    g = mc.func_calc(h, lambda t: t * np.abs(t) ** delta)
    thr = eps_cut ** (1 + delta)
    # closed conditions; the relative guard absorbs the rounding of t|t|^delta
    p0 = mc.spectral_projection(h, lambda t: np.abs(t) <= eps_cut)
    p1 = mc.spectral_projection(g, lambda t: np.abs(t) <= thr * (1 + 1e-12))
    diff = mc.op_norm(p0 - p1)
    return make_report("subs", diff, 1e-10, delta=delta, eps_cut=eps_cut,
                       rank=int(round(np.trace(p0).real)))


def _power_h2(h: AlgElement, beta: float) -> AlgElement:
    return h.map_blocks(lambda b: mc.frac_power(b @ b, beta))


def _cut_projection(h: AlgElement, level: float) -> AlgElement:
    return h.map_blocks(lambda b: mc.spectral_projection(b, lambda t: np.abs(t) <= level))


def sandwich(m: LinMap, a: AlgElement, b: AlgElement) -> LinMap:
    """The map ``x -> a phi(x) b`` built from batched images of the basis."""
    imgs = apply_batch(m, np.eye(m.dom.dim, dtype=complex))
    out = [ab[None] @ im @ bb[None] for ab, im, bb in zip(a.blocks, imgs, b.blocks)]
    return LinMap(m.dom, m.cod, _vecs(out))


def _step1_samples(psi: LinMap, samples: int, seed: int):
    rng = np.random.default_rng(seed)
    xs = [np.concatenate([h, g]) for h, g in zip(sample_batch(psi.dom, samples, "hermitian", rng),
                                                   sample_batch(psi.dom, samples, "general", rng))]
    return apply_batch(psi, _vecs(xs))


def step1_rhs(psi_norm: float, eps: float, K: float, theta: float, positive: bool) -> float:
    k = 4.0 if positive else K
    return 3 * k * psi_norm ** 0.6 * eps ** 0.2 + theta


def default_theta(psi_norm: float, eps: float, gamma: float = GAMMA_DEFAULT) -> float:
    return 0.01 * psi_norm ** 0.8 * eps ** (gamma / 5)


def choose_beta(psi: LinMap, h: AlgElement, eps: float, K: float, theta: float, *, positive: bool = False,
                gamma: float = GAMMA_DEFAULT, samples: int = 200, seed: int = 0) -> float:
    """Largest ``beta`` in ``1/40, 1/80, ...`` meeting the three damping-step requirements.

    (i) ``||psi(x) - (h^2)^b psi(x) (h^2)^b|| <= (3K ||psi||^{3/5} eps^{1/5} + theta) ||x||``
    on unit-norm samples, (ii) ``kappa_b = ||(1-p)(1 - (h^2)^{2b})|| <= theta`` and
    (iii) ``||psi||^{4b} < 2``.
    """
    if h.norm() == 0:
        raise ValueError("h must be nonzero")
    nrm = h.norm() if positive else norm_upper(psi)
    rhs = step1_rhs(nrm, eps, K, theta, positive)
    imgs = _step1_samples(psi, samples, seed)
    q = unit(h.shape) - _cut_projection(h, eps ** gamma)
    beta = BETA_START
    while beta >= BETA_FLOOR:
        hb = _power_h2(h, beta)
        diff = [im - b[None] @ im @ b[None] for im, b in zip(imgs, hb.blocks)]
        lhs = float(np.max(_batch_norm(diff)))
        kappa = (q @ (unit(h.shape) - hb @ hb)).norm()
        if lhs <= rhs and kappa <= theta and nrm ** (4 * beta) < 2:
            return beta
        beta /= 2
    raise BetaExhausted(f"no beta >= {BETA_FLOOR:g} satisfies the damping-step requirements")


def _exact_split(a: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(s, r')`` with ``r' ~ r`` and ``s + r' == a`` wherever floating point allows."""
    s = a - r
    r2 = a - s
    return s, np.where(s + r2 == a, r2, r)


def _corner_inverse(hg: AlgElement, level: float) -> tuple[AlgElement, float]:
    """Eigen-inverse of ``h_gamma`` on its corner; also the condition number there."""
    conds = []

    def inv(b):
        e = mc.herm_eig(b)
        w = e.eigenvalues
        keep = np.abs(w) > level
        vals = np.zeros_like(w)
        vals[keep] = 1.0 / w[keep]
        if np.any(keep):
            conds.append(float(np.max(np.abs(w[keep])) / np.min(np.abs(w[keep]))))
        return (e.basis * vals) @ mc.dagger(e.basis)

    out = hg.map_blocks(inv)
    return out, max(conds, default=1.0)


def _sa_scale(psi: LinMap) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(psi.action), initial=0.0)))


def small_part_bounds(psi_norm: float, eps: float, K: float, gamma: float, positive: bool) -> dict:
    if positive:
        one = 37 * psi_norm ** 0.8 * eps ** (1 / 16)
        return {"small_rhs": one, "small_two_term_rhs": None}
    one = (6 * K + 7) * psi_norm ** 0.8 * eps ** (1 / 16)
    two = 6 * K * psi_norm ** 0.6 * eps ** 0.2 + 7 * psi_norm ** 0.8 * eps ** (gamma / 5)
    return {"small_rhs": one, "small_two_term_rhs": two}


def delta_bound(psi_norm: float, eps: float, K: float, n_eigs: int, positive: bool) -> tuple[float, float]:
    """Jordan-defect budget for the normalized corner map, and the constant ``C`` used."""
    n = max(n_eigs, 2)
    if positive:
        c = alg_const(n, 2.0)
        return 24 * (2 * c * c + 10 * c + 17) * psi_norm * eps ** (1 / 16), c
    m = (K + 2) ** 5
    c = alg_const(n, m)
    return 24 * (c * c * m + 10 * c + 17) * psi_norm * eps ** (1 / 16), c


def decompose(psi: LinMap, eps: float, K: float, positive_flag: bool = False, theta: float | None = None, *,
              gamma: float = GAMMA_DEFAULT, samples: int = 200, seed: int = 0, measure: bool = True,
              budget: int = 6) -> DecompositionResult:
    """Small-plus-corner decomposition of a self-adjoint ``eps``-order-zero map."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if not is_self_adjoint(psi, _sa_scale(psi)):
        raise NotSelfAdjoint("decompose needs a self-adjoint map")
    h = apply(psi, unit(psi.dom))
    h = 0.5 * (h + h.H)
    hn = h.norm()
    nu = hn * (1 + 1e-12) if positive_flag else norm_upper(psi)
    zero_map = LinMap.zero(psi.dom, psi.cod)
    zero_el = AlgElement.zeros(psi.cod)
    log = []

    branch = None
    if hn == 0:
        branch = "h_zero"
    elif positive_flag and nu <= 166 * math.sqrt(eps):
        branch = "dichotomy_small"
    elif not positive_flag and nu <= math.sqrt((K + 2) ** 5 * eps):
        branch = "dichotomy_small"
    elif hn <= math.sqrt(eps):
        branch = "h_small"
    elif nu <= (K + 2) ** 5 * eps ** gamma:
        branch = "norm_small"

    bounds = small_part_bounds(nu, eps, K, gamma, positive_flag)
    if branch is not None:
        res = DecompositionResult(psi, zero_map, unit(psi.cod), None, gamma, theta, zero_el, None, branch,
                                  bounds, log)
        if measure:
            res.bounds["measured_psi_s_norm"] = map_norm(psi, budget=budget, seed=seed).value
        return res

    if theta is None:
        theta = default_theta(nu, eps, gamma)
        log.append(f"theta set automatically to {theta:.3e}")
    beta = choose_beta(psi, h, eps, K, theta, positive=positive_flag, gamma=gamma, samples=samples, seed=seed)
    hb = _power_h2(h, beta)
    p = _cut_projection(h, eps ** gamma)
    q = unit(psi.cod) - p
    raw_r = sandwich(psi, q @ hb, hb @ q)
    s_act, r_act = _exact_split(psi.action, raw_r.action)
    psi_s, psi_r = LinMap(psi.dom, psi.cod, s_act), LinMap(psi.dom, psi.cod, r_act)
    hg = apply(psi_r, unit(psi.dom))
    hg = 0.5 * (hg + hg.H)
    level = 0.5 * eps ** (gamma * (1 + 4 * beta))
    hg_inv, cond = _corner_inverse(hg, level)
    log.append(f"corner condition number {cond:.3e}")
    xi = sandwich(psi_r, hg_inv, unit(psi.cod))
    n_eigs = degree_of_algebraicity(h)
    if n_eigs < 2:
        log.append("h has a single eigenvalue; algebraic constant uses degree 2")
    delta, c = delta_bound(nu, eps, K, n_eigs, positive_flag)
    bounds.update({"delta_rhs": delta, "C": c, "N": n_eigs, "h_gamma_inv_norm": hg_inv.norm(),
                   "corner_condition": cond})
    res = DecompositionResult(psi_s, psi_r, p, beta, gamma, theta, hg, xi, "regular", bounds, log)
    if measure:
        res.bounds["measured_psi_s_norm"] = map_norm(psi_s, budget=budget, seed=seed).value
        res.bounds["measured_Xi_jordan_defect"] = jordan_defect(xi, budget=budget, seed=seed).value
        res.bounds["measured_Xi_sa_defect"] = sa_defect(xi, budget=budget, seed=seed).value
    return res


def _corner_residual(m: LinMap, q: AlgElement) -> float:
    imgs = apply_batch(m, np.eye(m.dom.dim, dtype=complex))
    res = [im - qb[None] @ im @ qb[None] for im, qb in zip(imgs, q.blocks)]
    return float(np.max(_batch_norm(res))) if m.dom.dim else 0.0


def verify_decomposition(result: DecompositionResult, psi: LinMap, eps: float, K: float,
                         positive: bool = False, budget: int = 6, seed: int = 0) -> CheckReport:
    """Structural clauses, the small-part bounds and the Jordan budget of ``Xi``."""
    subs = []
    exact = bool(np.array_equal(result.psi_s.action + result.psi_r.action, psi.action))
    resid = float(np.max(np.abs(result.psi_s.action + result.psi_r.action - psi.action), initial=0.0))
    subs.append(make_report("decompose/exact-sum", 0.0 if exact else max(resid, 1e-300), 0.0,
                            max_entry_residual=resid))
    b = result.bounds
    ms = b.get("measured_psi_s_norm")
    if ms is None:
        ms = map_norm(result.psi_s, budget=budget, seed=seed).value
    nu = apply(psi, unit(psi.dom)).norm() * (1 + 1e-12) if positive else norm_upper(psi)
    subs.append(make_report("decompose/small-part", ms, b["small_rhs"] + LESSSIM_SLACK, branch=result.branch))
    if b.get("small_two_term_rhs") is not None:
        subs.append(make_report("decompose/small-part-two-term", ms, b["small_two_term_rhs"] + LESSSIM_SLACK))
    if result.branch == "regular":
        q = unit(psi.cod) - result.p_gamma
        subs.append(make_report("decompose/corner-range", _corner_residual(result.psi_r, q), 1e-10))
        nr = map_norm(result.psi_r, budget=budget, seed=seed).value
        subs.append(make_report("decompose/corner-norm", nr, nu ** (1 + 4 * result.beta), beta=result.beta))
        sa = float(np.max(np.abs(result.psi_r.action - _adj(result.psi_r)), initial=0.0))
        subs.append(make_report("decompose/corner-self-adjoint", sa, 1e-10))
        inv_rhs = eps ** (-result.gamma * (1 + 4 * result.beta))
        subs.append(make_report("decompose/inverse-norm", b["h_gamma_inv_norm"], inv_rhs))
        xi_unit = apply(result.Xi, unit(psi.dom))
        subs.append(make_report("decompose/Xi-unit", (xi_unit - q).norm(), 1e-8))
        jd = b.get("measured_Xi_jordan_defect")
        if jd is None:
            jd = jordan_defect(result.Xi, budget=budget, seed=seed).value
        sd = b.get("measured_Xi_sa_defect")
        if sd is None:
            sd = sa_defect(result.Xi, budget=budget, seed=seed).value
        subs.append(make_report("decompose/Xi-jordan", jd, b["delta_rhs"] + LESSSIM_SLACK, C=b["C"], N=b["N"]))
        subs.append(make_report("decompose/Xi-self-adjoint", sd, b["delta_rhs"] + LESSSIM_SLACK))
    return combine("decomposition", subs, branch=result.branch, eps=eps, K=K, positive=positive)


def _adj(m: LinMap) -> np.ndarray:
    from .linmap import adjoint_map
    return adjoint_map(m).action


def pipeline_finite_dim(phi: LinMap, eps: float, K: float, *, sa_eps: float | None = None,
                        positive: bool | None = None, budget: int = 6, seed: int = 0,
                        samples: int = 200) -> tuple[LinMap, CheckReport]:
    """Approximate ``phi`` by a corner map whose normalization is almost Jordan.

    ``sa_eps`` bounds the self-adjointness defect of ``phi`` (default ``eps``).
    Returns the corner map and a report on ``||phi - Phi||`` and the Jordan budget.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if positive is None:
        positive = is_completely_positive(phi)
    nphi = norm_upper(phi)
    if positive:
        psi, eps1, e0 = phi, eps, eps
        dist_rhs = 37 * nphi ** 0.8 * eps ** (1 / 16)
    else:
        sa = eps if sa_eps is None else sa_eps
        e0 = max(eps, sa)
        psi = selfadjointify(phi)
        eps1 = min(1.0, e0 + 0.5 * e0 * nphi)
        dist_rhs = (6 * K + 7) * (nphi ** 0.8 + nphi ** 1.8 / 32) * e0 ** (1 / 16) + 0.5 * e0
    res = decompose(psi, eps1, K, positive, gamma=GAMMA_DEFAULT, samples=samples, seed=seed, budget=budget)
    phi_out = res.psi_r
    dist = map_norm(phi - phi_out, budget=budget, seed=seed).value
    subs = [make_report("pipeline/distance", dist, dist_rhs + LESSSIM_SLACK, eps_adjusted=eps1)]
    if not positive:
        subs.append(make_report("pipeline/symmetrization", map_norm(phi - psi, budget=budget, seed=seed).value,
                                0.5 * (eps if sa_eps is None else sa_eps)))
    if res.branch == "regular":
        subs.append(make_report("pipeline/Xi-jordan", res.bounds["measured_Xi_jordan_defect"],
                                res.bounds["delta_rhs"] + LESSSIM_SLACK, N=res.bounds["N"]))
    return phi_out, combine("pipeline", subs, branch=res.branch, positive=positive, eps=eps, e0=e0)
