"""Closed-form error functions and constants, and one checker per inequality.

Every checker returns a :class:`CheckReport`.  Left-hand sides are measured
on samples (lower-bound semantics), right-hand sides use certified upper
bounds for map norms, so a reported pass is sound and a reported failure
is a genuine counterexample up to floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import matcore as mc
from .algebra import AlgElement, as_shape, center_basis, refine_dist_to_corner, support_projection, unit
from .linmap import (LinMap, apply, apply_batch, is_completely_positive, is_self_adjoint, map_norm,
                     norm_upper, selfadjointify, unital_extend)

# relative tolerance of the pass criterion
PASS_TOL = 1e-9
# explicit slack for bounds that only hold up to an arbitrarily small excess
LESSSIM_SLACK = 1e-6
ARG_CONST = 17 ** 2 / 3 + 1
SP_PROJ_MAX_EIGS = 12


class DomainError(ValueError):
    pass


class DegreeZero(ValueError):
    pass


class BadDegree(ValueError):
    pass


class ZeroH(ValueError):
    pass


class HypothesisFailed(ValueError):
    pass


class NotSelfAdjoint(ValueError):
    pass


class EmptyCorpus(ValueError):
    pass


class TooManyEigenvalues(ValueError):
    pass


# ---------------------------------------------------------------------------
# reports

def _f(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass
class CheckReport:
    inequality_id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    context: dict = field(default_factory=dict)
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "inequality_id": self.inequality_id,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "pass": bool(self.passed),
            "context": {k: _f(v) for k, v in sorted(self.context.items())},
        }
        if self.details:
            d["details"] = [r.to_dict() for r in self.details]
        return d


def passes(lhs: float, rhs: float) -> bool:
    return bool(rhs - lhs >= -PASS_TOL * max(1.0, rhs))


def make_report(iid: str, lhs: float, rhs: float, **ctx) -> CheckReport:
    lhs, rhs = float(lhs), float(rhs)
    return CheckReport(iid, lhs, rhs, rhs - lhs, passes(lhs, rhs), ctx)


def worst_report(iid: str, lhs, rhs, **ctx) -> CheckReport:
    """Report the sample closest to (or furthest beyond) failing."""
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), lhs.shape)
    if lhs.size == 0:
        return make_report(iid, 0.0, 0.0, samples=0, **ctx)
    slack = rhs - lhs + PASS_TOL * np.maximum(1.0, rhs)
    i = int(np.argmin(slack))
    pos = rhs > 0
    ratio = float(np.max(lhs[pos] / rhs[pos])) if np.any(pos) else None
    rep = make_report(iid, lhs[i], rhs[i], samples=int(lhs.size), max_ratio=ratio, **ctx)
    rep.passed = bool(np.all(slack >= 0))
    return rep


def combine(iid: str, subs: list[CheckReport], **ctx) -> CheckReport:
    """Parent report: passes iff every sub-report passes; shows the tightest one."""
    if not subs:
        return make_report(iid, 0.0, 0.0, **ctx)
    key = [r.margin + PASS_TOL * max(1.0, r.rhs) for r in subs]
    w = subs[int(np.argmin(key))]
    rep = CheckReport(iid, w.lhs, w.rhs, w.margin, all(r.passed for r in subs), dict(ctx), list(subs))
    rep.context["tightest"] = w.inequality_id
    return rep


# ---------------------------------------------------------------------------
# zeta and friends

@dataclass(frozen=True)
class ZetaParams:
    tail_cutoff: int = 10 ** 6
    domain_floor: float = 0.0
    chunk: int = 10 ** 6


def zeta_argument(s: float) -> float:
    """Inner change of variables ``8 pi / (sqrt(3 (c s^{-1/4} - 1)) - 1)``."""
    inner = ARG_CONST * s ** -0.25 - 1.0
    if inner <= 0:
        raise DomainError(f"s = {s} outside the domain of the error function")
    r = math.sqrt(3.0 * inner)
    if r <= 1.0:
        raise DomainError(f"s = {s} outside the domain of the error function")
    return 8.0 * math.pi / (r - 1.0)


def xi_A(t: float) -> float:
    return (abs(2 * math.sin(t) + t * (1 - math.cos(t))) / (2 * math.pi)
            + abs(t + 2 * ((1 - math.cos(t)) / t) * math.cos(t)) / math.pi)


def _chunked_sum(fn, kmax: int, chunk: int) -> float:
    total = 0.0
    for a in range(1, kmax + 1, chunk):
        k = np.arange(a, min(a + chunk, kmax + 1), dtype=float)
        total += float(np.sum(fn(k)))
    return total


def xi_B(t: float, params: ZetaParams = ZetaParams()) -> float:
    """Truncated series plus the certified tail ``4/(pi K)``."""
    kmax = params.tail_cutoff
    pref = 2 * abs(math.sin(t / 2)) / t
    # sum over k != 0, 1 of |1 - e^{ikt}| / (pi k^2), folded onto k >= 1
    one_side = _chunked_sum(lambda k: 2 * np.abs(np.sin(k * t / 2)) / (np.pi * k * k), kmax, params.chunk)
    s = 2 * one_side - 2 * abs(math.sin(t / 2)) / math.pi
    return pref * (s + 4 / (math.pi * kmax))


def xi_Gamma(t: float, params: ZetaParams = ZetaParams()) -> float:
    kmax = params.tail_cutoff
    s = _chunked_sum(lambda j: (np.abs(np.sin(j * t)) + np.abs(np.sin((j + 1) * t))) / (np.pi * j * (j + 1)),
                     kmax, params.chunk)
    return s + 4 / (math.pi * kmax)


def xi(t: float, params: ZetaParams = ZetaParams()) -> float:
    return float(xi_A(t) + xi_B(t, params) + xi_Gamma(t, params))


def zeta(s: float, params: ZetaParams = ZetaParams()) -> float:
    """Upper-bound evaluation of the error function (``zeta(0) = 0``)."""
    if s < 0 or not math.isfinite(s):
        raise DomainError(f"s = {s} must be a finite nonnegative number")
    if s == 0:
        return 0.0
    if s < params.domain_floor:
        raise DomainError(f"s = {s} below the configured floor {params.domain_floor}")
    return float(xi(zeta_argument(s), params))


def eta(eps: float, phi_norm: float, params: ZetaParams = ZetaParams()) -> float:
    """Triple-product error ``4 c^2 K^{1/2} eps^{1/2} (2 + zeta(16 eps/K)) + K zeta(16 eps/K)``, ``K = 16 ||phi||^2``."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if not phi_norm > math.sqrt(eps):
        raise DomainError(f"need ||phi|| > eps^(1/2), got {phi_norm} vs {math.sqrt(eps)}")
    k = 16.0 * phi_norm ** 2
    z = zeta(16.0 * eps / k, params)
    return 4 * ARG_CONST ** 2 * math.sqrt(k * eps) * (2 + z) + k * z


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex).ravel()
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if nz.size else c[:0]


def _poly_elem(coeffs, h: AlgElement) -> AlgElement:
    return h.map_blocks(lambda b: mc.poly_eval(coeffs, b))


def _as_elem(h) -> AlgElement:
    if isinstance(h, AlgElement):
        return h
    h = mc.as_cmat(h)
    return AlgElement([h.shape[0]], [h])


def theta(coeffs, h, phi_norm_pos: float, eps: float) -> float:
    """Recursive commutator bound; ``coeffs`` ascending, ``h = phi(1)``."""
    c = _trim(coeffs)
    if c.size < 2:
        raise DegreeZero("polynomial must have degree at least 1")
    h = _as_elem(h)
    if c.size == 2:
        return 8 * abs(c[1]) * eps
    tail = c[1:]
    return 8 * phi_norm_pos * theta(tail, h, phi_norm_pos, eps) + 8 * _poly_elem(tail, h).norm() * eps


def alg_const(n: int, m: float) -> float:
    """``sum_{i=0}^{N-2} 8^{i+1} M^i``."""
    if int(n) != n or n < 2:
        raise BadDegree(f"degree must be an integer >= 2, got {n}")
    return float(sum(8 ** (i + 1) * m ** i for i in range(int(n) - 1)))


def circle_sup(coeffs, radius: float, n: int = 4096) -> float:
    """Grid maximum of ``|P|`` on ``|z| = radius`` (a lower estimate of the sup)."""
    z = radius * np.exp(2j * np.pi * np.arange(n) / n)
    return float(np.max(np.abs(np.polyval(np.asarray(coeffs, dtype=complex)[::-1], z))))


def circle_sup_upper(coeffs, radius: float, n: int = 4096) -> float:
    """Certified upper bound: grid max plus Lipschitz correction along the arc."""
    c = np.asarray(coeffs, dtype=complex)
    k = np.arange(c.size)
    lip = float(np.sum(k[1:] * np.abs(c[1:]) * radius ** (k[1:] - 1))) if c.size > 1 else 0.0
    return circle_sup(c, radius, n) + lip * math.pi * radius / n


# ---------------------------------------------------------------------------
# batched sampling helpers

def _batch_norm(blocks) -> np.ndarray:
    return np.max(np.stack([np.linalg.norm(b, 2, axis=(1, 2)) for b in blocks]), axis=0)


def _vecs(blocks) -> np.ndarray:
    return np.concatenate([b.reshape(b.shape[0], -1) for b in blocks], axis=1).T


def _haar(n, s, rng):
    z = (rng.standard_normal((s, n, n)) + 1j * rng.standard_normal((s, n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def sample_batch(shape, s: int, kind: str, rng) -> list[np.ndarray]:
    """``s`` unit-norm samples as one ``(s, n, n)`` array per block.

    ``positive`` mixes random PSD elements with random projections.
    """
    shape = as_shape(shape)
    out = []
    for n in shape.blocks:
        g = rng.standard_normal((s, n, n)) + 1j * rng.standard_normal((s, n, n))
        if kind == "positive":
            b = g @ np.conj(np.swapaxes(g, 1, 2))
            u = _haar(n, s, rng)
            mask = (rng.random((s, n)) < 0.5).astype(complex)
            proj = (u * mask[:, None, :]) @ np.conj(np.swapaxes(u, 1, 2))
            half = np.arange(s) % 2 == 1
            b[half] = proj[half]
        elif kind == "hermitian":
            b = 0.5 * (g + np.conj(np.swapaxes(g, 1, 2)))
        elif kind == "general":
            b = g
        else:
            raise ValueError(f"unknown sample kind {kind!r}")
        out.append(b)
    nrm = _batch_norm(out)
    nrm[nrm == 0] = 1.0
    return [b / nrm[:, None, None] for b in out]


def _pairs_batch(shape, s: int, kind: str, rng):
    """Orthogonal pairs ``(x, y)`` sharing an eigenbasis, normalized."""
    shape = as_shape(shape)
    xs, ys = [], []
    for n in shape.blocks:
        u = _haar(n, s, rng)
        lab = rng.integers(0, 3, size=(s, n))
        if kind == "positive":
            a, b = rng.uniform(0, 1, (s, n)), rng.uniform(0, 1, (s, n))
        else:
            a, b = rng.uniform(-1, 1, (s, n)), rng.uniform(-1, 1, (s, n))
        uh = np.conj(np.swapaxes(u, 1, 2))
        if kind in ("positive", "hermitian"):
            xs.append((u * np.where(lab == 1, a, 0.0)[:, None, :]) @ uh)
            ys.append((u * np.where(lab == 2, b, 0.0)[:, None, :]) @ uh)
        else:
            p = (u * (lab == 1)[:, None, :]) @ uh
            q = (u * (lab == 2)[:, None, :]) @ uh
            ga = rng.standard_normal((s, n, n)) + 1j * rng.standard_normal((s, n, n))
            gb = rng.standard_normal((s, n, n)) + 1j * rng.standard_normal((s, n, n))
            xs.append(p @ ga @ p)
            ys.append(q @ gb @ q)
    nx, ny = _batch_norm(xs), _batch_norm(ys)
    keep = (nx > 1e-6) & (ny > 1e-6)
    return ([b[keep] / nx[keep, None, None] for b in xs],
            [b[keep] / ny[keep, None, None] for b in ys])


def _images(m: LinMap, blocks) -> list[np.ndarray]:
    return apply_batch(m, _vecs(blocks))


# ---------------------------------------------------------------------------
# order-zero extensions, self-adjointification, almost Jordan

def check_oz_extensions(m: LinMap, eps: float, samples: int = 200, seed: int = 0) -> CheckReport:
    """Orthogonal-pair bounds: ``eps`` (positive), ``4 eps`` (self-adjoint),
    ``16 eps`` (arbitrary), and ``eps^{1/2}`` when the map is a cp contraction."""
    rng = np.random.default_rng(seed)
    subs = []
    for kind, const in (("positive", 1.0), ("hermitian", 4.0), ("general", 16.0)):
        xs, ys = _pairs_batch(m.dom, samples, kind, rng)
        px, py = _images(m, xs), _images(m, ys)
        lhs = _batch_norm([a @ b for a, b in zip(px, py)])
        subs.append(worst_report(f"oz-pairs/{kind}", lhs, const * eps, eps=eps, constant=const))
    cpc = is_completely_positive(m) and norm_upper(m) <= 1 + 1e-9
    if cpc:
        xs, ys = _pairs_batch(m.dom, samples, "general", rng)
        px, py = _images(m, xs), _images(m, ys)
        lhs = _batch_norm([a @ b for a, b in zip(px, py)])
        subs.append(worst_report("oz-pairs/cpc", lhs, math.sqrt(eps), eps=eps))
    return combine("oz-extensions", subs, eps=eps, cpc=cpc)


def check_selfadjointify(m: LinMap, eps: float, sa_eps: float, budget: int = 8, seed: int = 0) -> CheckReport:
    """Symmetrized map: distance ``<= sa/2`` and order-zero defect ``<= eps + sa ||phi|| / 2``."""
    from .defect import oz_defect
    psi = selfadjointify(m)
    nu = norm_upper(m)
    dist = map_norm(m - psi, budget=budget, seed=seed).value
    oz = oz_defect(psi, budget=budget, seed=seed).value
    subs = [make_report("selfadjointify/distance", dist, 0.5 * sa_eps, sa_eps=sa_eps),
            make_report("selfadjointify/order-zero", oz, eps + 0.5 * sa_eps * nu,
                        eps=eps, sa_eps=sa_eps, phi_norm_upper=nu)]
    return combine("selfadjointify", subs)


def check_almost_jordan(m: LinMap, eps: float, samples: int = 500, seed: int = 0) -> CheckReport:
    """``||phi(x)^2 - h phi(x^2)||`` against ``8/18/108 eps ||x||^2``."""
    rng = np.random.default_rng(seed)
    h = apply(m, unit(m.dom))
    subs = []
    for kind, const in (("positive", 8.0), ("hermitian", 18.0), ("general", 108.0)):
        xs = sample_batch(m.dom, samples, kind, rng)
        if kind != "general":
            for b in xs:
                b[0] = np.eye(b.shape[1])
        px = _images(m, xs)
        px2 = _images(m, [b @ b for b in xs])
        d = [p @ p - hb @ q for p, q, hb in zip(px, px2, h.blocks)]
        lhs = _batch_norm(d)
        subs.append(worst_report(f"almost-jordan/{kind}", lhs, const * eps, eps=eps, constant=const))
    return combine("almost-jordan", subs, eps=eps)


def check_unital_extension(m: LinMap, z0: AlgElement, delta: float, budget: int = 8, seed: int = 0) -> CheckReport:
    """Self-adjointness defect of the unit extension is at most ``6 delta``."""
    from .defect import sa_defect
    if (z0 - z0.H).norm() > delta * (1 + 1e-12):
        raise HypothesisFailed("need ||z0 - z0*|| <= delta")
    ext = unital_extend(m, z0)
    val = sa_defect(ext, budget=budget, seed=seed).value
    return make_report("unital-extension/self-adjoint", val, 6 * delta, delta=delta)


# ---------------------------------------------------------------------------
# commutation with polynomials in h

def _pos_images(m: LinMap, samples: int, rng):
    xs = sample_batch(m.dom, samples, "positive", rng)
    for b in xs:
        b[0] = np.eye(b.shape[1])
    return _images(m, xs)


def _comm_norms(pb: AlgElement, imgs) -> np.ndarray:
    return _batch_norm([q @ p - p @ q for q, p in zip(pb.blocks, imgs)])


def check_comm_theta(m: LinMap, coeffs, eps: float, samples: int = 200, seed: int = 0) -> CheckReport:
    """``||[P(h), phi(x)]|| <= Theta_N(P) ||x||`` on positive ``x``."""
    rng = np.random.default_rng(seed)
    h = apply(m, unit(m.dom))
    c = _trim(coeffs)
    m_pos = norm_upper(m)
    rhs = theta(c, h, m_pos, eps)
    lhs = _comm_norms(_poly_elem(c, h), _pos_images(m, samples, rng))
    return worst_report("comm-theta", lhs, rhs, eps=eps, degree=int(c.size - 1), phi_pos_upper=m_pos)


def _herm_h(m: LinMap) -> AlgElement:
    h = apply(m, unit(m.dom))
    if not h.is_hermitian():
        raise NotSelfAdjoint("phi(1) must be Hermitian")
    return 0.5 * (h + h.H)


def degree_of_algebraicity(h: AlgElement) -> int:
    """Number of distinct eigenvalues across all blocks."""
    w = np.concatenate([np.linalg.eigvalsh(b) for b in h.blocks])
    return int(mc.distinct_eigenvalues(np.diag(w).astype(complex)).size)


def check_alg_comm(m: LinMap, coeffs, eps: float, samples: int = 200, seed: int = 0) -> CheckReport:
    """``||[P(h), phi(x)]|| <= (C eps / ||h||) sup_{|z|=||h||} |P| ||x||`` for algebraic ``h``."""
    c = _trim(coeffs)
    if c.size == 0 or c[0] != 0:
        raise ValueError("P(0) must vanish")
    h = _herm_h(m)
    hn = h.norm()
    if hn == 0:
        raise ZeroH("phi(1) = 0")
    rng = np.random.default_rng(seed)
    n = max(degree_of_algebraicity(h), 2)
    mm = norm_upper(m) / hn
    cc = alg_const(n, mm)
    rhs = cc * eps / hn * circle_sup(c, hn)
    lhs = _comm_norms(_poly_elem(c, h), _pos_images(m, samples, rng))
    return worst_report("alg-comm", lhs, rhs, eps=eps, N=n, M=mm, C=cc, h_norm=hn)


# ---------------------------------------------------------------------------
# openness index and centre-range checks

def _center_preimages(m: LinMap, h: AlgElement, tol: float = 1e-8):
    """Least-squares central preimages of the nonzero spectral projections of ``h``."""
    zs = np.stack([apply(m, e).vec() for e in center_basis(m.dom)], axis=1)
    dense = h.dense()
    w = np.linalg.eigvalsh(dense)
    lam = mc.distinct_eigenvalues(np.diag(w).astype(complex))
    scale = max(float(np.max(np.abs(lam))), 1e-300)
    lam = lam[np.abs(lam) > mc.RANK_CUTOFF * scale]
    targets = []
    for t in lam:
        gap = 1e-10 * max(1.0, scale)
        q = h.map_blocks(lambda b: mc.spectral_projection(b, lambda e: np.abs(e - t) <= gap))
        targets.append(q.vec())
    if not targets:
        return zs, np.zeros((zs.shape[1], 0), dtype=complex), lam
    tg = np.stack(targets, axis=1)
    sol, *_ = np.linalg.lstsq(zs, tg, rcond=None)
    resid = np.linalg.norm(zs @ sol - tg, axis=0)
    if np.any(resid > tol * np.maximum(1.0, np.linalg.norm(tg, axis=0))):
        raise HypothesisFailed("C*(h) is not contained in the image of the centre")
    return zs, sol, lam


def _min_preimage_sup(c0: np.ndarray, null: np.ndarray, n_dir: int = 16) -> float:
    """Upper estimate of ``min_t ||c0 + N t||_inf`` over complex ``t``.

    Solved as a linear program with each modulus replaced by an inscribed
    polygon constraint (which implies the modulus bound), so the returned
    value is attained by a feasible ``t`` and is never below the minimum.
    """
    from scipy.optimize import linprog
    k = null.shape[1]
    d, r = null.shape
    angles = 2 * np.pi * np.arange(n_dir) / n_dir
    rows, rhs = [], []
    cos_half = math.cos(math.pi / n_dir)
    for i in range(d):
        for th in angles:
            e = np.exp(-1j * th)
            # Re(e (c0_i + N_i t)) <= u cos(pi/n)
            coef = e * null[i]
            rows.append(np.concatenate([coef.real, -coef.imag, [-cos_half]]))
            rhs.append(-(e * c0[i]).real)
    res = linprog(np.concatenate([np.zeros(2 * k), [1.0]]), A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(None, None)] * (2 * k) + [(0, None)], method="highs")
    base = float(np.max(np.abs(c0)))
    if not res.success:
        return base
    t = res.x[:k] + 1j * res.x[k:2 * k]
    return min(base, float(np.max(np.abs(c0 + null @ t))))


def openness_index(m: LinMap, h: AlgElement | None = None, n_phase: int = 12, certified: bool = True) -> float:
    """Relative openness index of ``phi`` restricted to the centre, w.r.t. ``C*(h)``.

    With ``w = sum_j a_j Q_j`` over the spectral projections of ``h`` the
    index is the supremum over ``max|a_j| <= 1`` of the smallest sup-norm of a
    central preimage.  That function is convex, so the supremum sits on the
    torus ``|a_j| = 1``.  For an injective restriction it is a maximal row
    sum.  Otherwise a phase net is searched; with ``certified`` a Lipschitz
    term is added so the result is an upper bound, without it the value is
    the plain net maximum.
    """
    h = _herm_h(m) if h is None else h
    zs, lmat, lam = _center_preimages(m, h)
    if lmat.shape[1] == 0:
        return 0.0
    rowsum = float(np.max(np.sum(np.abs(lmat), axis=1)))
    u, s, vh = np.linalg.svd(zs)
    null = vh[np.sum(s > 1e-12 * max(s[0], 1e-300)):].conj().T
    if null.shape[1] == 0:
        return rowsum
    jn = lmat.shape[1]
    phases = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    worst = 0.0
    for combo in product(range(n_phase), repeat=max(jn - 1, 0)):
        a = np.concatenate([[1.0], phases[list(combo)]])
        worst = max(worst, _min_preimage_sup(lmat @ a, null))
    if certified:
        worst += rowsum * 2 * math.sin(math.pi / (2 * n_phase))
    return worst


def check_phi_P_phi(m: LinMap, coeffs, eps: float, samples: int = 200, seed: int = 0,
                    M: float | None = None, params: ZetaParams = ZetaParams()) -> CheckReport:
    """``||phi(x) P(h) phi(y)|| <= M ||phi|| (eta + 24 eps) ||P(h)||`` on positive ``x perp y``."""
    h = _herm_h(m)
    mm = openness_index(m, h) if M is None else M
    nl = map_norm(m).value
    if not nl > math.sqrt(eps):
        raise DomainError("need ||phi|| > eps^(1/2)")
    nu = norm_upper(m)
    et = eta(eps, nu, params)
    pb = _poly_elem(_trim(coeffs), h) if _trim(coeffs).size else AlgElement.zeros(h.shape)
    rng = np.random.default_rng(seed)
    xs, ys = _pairs_batch(m.dom, samples, "positive", rng)
    px, py = _images(m, xs), _images(m, ys)
    lhs = _batch_norm([a @ q @ b for a, q, b in zip(px, pb.blocks, py)])
    rhs = mm * nu * (et + 24 * eps) * pb.norm()
    return worst_report("phi-P-phi", lhs, rhs, eps=eps, M=mm, eta=et, phi_norm_upper=nu)


def check_hZ_comm(m: LinMap, coeffs, eps: float, samples: int = 200, seed: int = 0,
                  M: float | None = None, params: ZetaParams = ZetaParams()) -> CheckReport:
    """Centre-range commutator bound with the explicit ``||tau P(h)||`` form.

    The right side is the larger of ``2 eps^{1/2} sup|P|`` and
    ``8 M ||phi|| (eta + 24 eps) ||tau P(h)||``: whichever case of
    ``||phi||`` versus ``eps^{1/2}`` holds, one of them is a valid bound.
    """
    c = _trim(coeffs)
    if c.size == 0 or c[0] != 0:
        raise ValueError("P(0) must vanish")
    h = _herm_h(m)
    hn = h.norm()
    if hn == 0:
        raise ZeroH("phi(1) = 0")
    mm = openness_index(m, h) if M is None else M
    nu = norm_upper(m)
    sup_p = circle_sup_upper(c, hn)
    trivial = 2 * math.sqrt(eps) * sup_p
    if nu > math.sqrt(eps):
        main = 8 * mm * nu * (eta(eps, nu, params) + 24 * eps) * _poly_elem(c[1:], h).norm()
        rhs = max(trivial, main)
    else:
        rhs = trivial
    rng = np.random.default_rng(seed)
    lhs = _comm_norms(_poly_elem(c, h), _pos_images(m, samples, rng))
    return worst_report("hZ-comm", lhs, rhs, eps=eps, M=mm, phi_norm_upper=nu, trivial_branch=nu <= math.sqrt(eps))


# ---------------------------------------------------------------------------
# spectral projections

def _sp_polys(eigs: np.ndarray, radius: float, n_polys: int) -> list[np.ndarray]:
    from numpy.polynomial import chebyshev as C
    polys = []
    deg = max(1, min(n_polys // 2, 12))
    for k in range(1, deg + 1):
        c = np.zeros(k + 1, dtype=complex)
        c[k] = 1.0
        polys.append(c)
        # T_k(z/R) - T_k(0) in the power basis
        t = C.cheb2poly(np.eye(k + 1)[k]) / radius ** np.arange(k + 1)
        t = t.astype(complex)
        t[0] = 0.0
        polys.append(t)
    # interpolants equal to 1 at one eigenvalue, 0 at the others and at 0
    nodes = [e for e in eigs if abs(e) > 1e-12]
    for e in nodes:
        others = [f for f in eigs if f != e]
        roots = [0.0] + [f for f in others if abs(f) > 1e-12]
        p = np.poly1d(roots, r=True)
        coef = (p.coeffs / p(e))[::-1].astype(complex)
        polys.append(coef)
    return polys


def check_sp_proj(S, T, R: float | None = None, n_polys: int = 24) -> CheckReport:
    """Test the spectral-projection commutator implication as stated.

    ``delta_hat`` is the largest ratio ``||[P(S), T]|| / sup_{|z|=R}|P|`` over
    sampled polynomials with ``P(0) = 0`` (sup bounded from above), and the
    conclusion ``||[V, T]|| <= delta_hat`` is checked on every spectral
    projection ``V`` of ``S``.
    """
    s = mc.hermitize(S)
    t = mc.as_cmat(T)
    eigs = mc.distinct_eigenvalues(s)
    if eigs.size > SP_PROJ_MAX_EIGS:
        raise TooManyEigenvalues(f"{eigs.size} distinct eigenvalues exceed {SP_PROJ_MAX_EIGS}")
    radius = float(R) if R is not None else max(mc.op_norm(s), 1e-300)
    delta_hat = 0.0
    for c in _sp_polys(eigs, radius, n_polys):
        sup = circle_sup_upper(c, radius)
        if sup > 0:
            delta_hat = max(delta_hat, mc.op_norm(mc.commutator(mc.poly_eval(c, s), t)) / sup)
    e = mc.herm_eig(s)
    gap = 1e-10 * max(1.0, float(np.max(np.abs(eigs))))
    projs = [mc.spectral_projection(s, lambda w, v=v: np.abs(w - v) <= gap) for v in eigs]
    worst = 0.0
    for mask in product((0, 1), repeat=len(projs)):
        v = sum((p for p, b in zip(projs, mask) if b), np.zeros_like(s))
        worst = max(worst, mc.op_norm(mc.commutator(v, t)))
    del e
    return make_report("sp-proj", worst, delta_hat, delta_hat=delta_hat, R=radius,
                       n_eigenvalues=int(eigs.size))


# ---------------------------------------------------------------------------
# hereditary distance, factorizations, dichotomy

HERED_ALPHA_AB = 1 / 20
HERED_ALPHA_C = 1 / 40


def _require_sa(psi: LinMap):
    if not is_self_adjoint(psi, 1e-9 * max(1.0, float(np.max(np.abs(psi.action), initial=0.0)))):
        raise NotSelfAdjoint("map must be self-adjoint")


@dataclass
class _HeredContext:
    h: AlgElement
    p: AlgElement
    norm: float  # norm of psi (or ||psi||_+) upper bound

    def power(self, a: float) -> AlgElement:
        """``(h^2)^a`` on the support of ``h`` (same cutoff as the support projection)."""
        def pw(b):
            e = mc.herm_eig(b)
            w = np.abs(e.eigenvalues)
            keep = w > mc.RANK_CUTOFF * float(np.max(w, initial=0.0))
            vals = np.zeros_like(w)
            vals[keep] = w[keep] ** (2 * a)
            return (e.basis * vals) @ mc.dagger(e.basis)
        return self.h.map_blocks(pw)


def _hered_ctx(psi: LinMap, positive: bool) -> _HeredContext:
    h = apply(psi, unit(psi.dom))
    h = 0.5 * (h + h.H)
    nrm = h.norm() * (1 + 1e-12) if positive else norm_upper(psi)
    return _HeredContext(h, support_projection(h), nrm)


def _omega_root(psi: LinMap, ctx: _HeredContext, x: AlgElement):
    px = apply(psi, x)
    px2 = apply(psi, x @ x)
    om = ctx.h @ px2 @ px @ px2 @ ctx.h
    om = ctx.p @ (0.5 * (om + om.H)) @ ctx.p
    return px, om, om.map_blocks(lambda b: mc.sign_root(b, 5))


def _factor_candidates(px, w, ctx, a_ab, a_c):
    """Witnesses (u, v, d) from the fifth root and from direct division."""
    pa, na = ctx.power(a_ab), ctx.power(-a_ab)
    pc, nc = ctx.power(a_c), ctx.power(-a_c)
    out = []
    for base in (w, px):
        out.append({"u": base @ na, "v": na @ base, "d": nc @ base @ nc})
    return out, (pa, pc)


def _residuals(px, wit, pw):
    pa, pc = pw
    return {"u": (px - wit["u"] @ pa).norm(), "v": (px - pa @ wit["v"]).norm(),
            "d": (px - pc @ wit["d"] @ pc).norm()}


def hereditary_sample(psi: LinMap, x: AlgElement, ctx: _HeredContext | None = None,
                      positive: bool = False, a_ab: float = HERED_ALPHA_AB, a_c: float = HERED_ALPHA_C) -> dict:
    """All hereditary-factorization quantities at one input, as raw numbers.

    Returns distance (upper), clause residuals and witness norms, choosing
    for each clause the better of the two witness constructions.  For a
    non-Hermitian ``x`` the witnesses are assembled from its real and
    imaginary parts.
    """
    ctx = ctx or _hered_ctx(psi, positive)
    nx = x.norm()
    herm = (x - x.H).norm() <= 1e-12 * max(nx, 1e-300)
    parts = [0.5 * (x + x.H)] if herm else [0.5 * (x + x.H), -0.5j * (x - x.H)]
    cands_parts, om_gap = [], 0.0
    for xp in parts:
        px, om, w = _omega_root(psi, ctx, xp)
        cands, pw = _factor_candidates(px, w, ctx, a_ab, a_c)
        cands_parts.append(cands)
        if herm:
            p5 = px @ px @ px @ px @ px
            om_gap = (p5 - om).norm()
    px_full = apply(psi, x)
    dist_up = (px_full - ctx.p @ px_full @ ctx.p).norm()
    res = {"x_norm": nx, "hermitian": herm, "dist": dist_up, "omega_gap": om_gap}
    for key in ("u", "v", "d"):
        best = None
        for ci in range(2):
            if herm:
                wit = cands_parts[0][ci]
            else:
                wit = {k: cands_parts[0][ci][k] + 1j * cands_parts[1][ci][k] for k in ("u", "v", "d")}
            r = _residuals(px_full, wit, pw)[key]
            nw = wit[key].norm()
            cand = (r, nw)
            best = cand if best is None else best + cand
        res[key] = best  # (r0, n0, r1, n1)
    return res


def _budget(key: str, norm: float, nx: float, coef: float, a_ab: float, a_c: float) -> float:
    if key == "d":
        return coef * norm ** (0.5 + 6 * a_c) * nx ** (0.5 + 10 * a_c)
    return coef * norm ** (1 - 2 * a_ab) * nx


def _pick(res: dict, key: str, budget: float):
    r0, n0, r1, n1 = res[key]
    ok = [(r, n) for r, n in ((r0, n0), (r1, n1)) if n <= budget * (1 + PASS_TOL)]
    if ok:
        return min(ok)
    return min(((r0, n0), (r1, n1)), key=lambda t: t[1])


def _hered_inputs(psi: LinMap, samples: int, rng, positive: bool):
    kinds = ("positive", "general") if positive else ("hermitian", "general")
    xs = []
    for kind in kinds:
        for blocks in zip(*sample_batch(psi.dom, samples, kind, rng)):
            xs.append(AlgElement(psi.dom, list(blocks)))
    xs.insert(0, unit(psi.dom))
    return xs


def hereditary_records(psi: LinMap, eps: float, samples: int = 16, seed: int = 0, positive: bool = False,
                       a_ab: float = HERED_ALPHA_AB, a_c: float = HERED_ALPHA_C) -> list[dict]:
    _require_sa(psi)
    rng = np.random.default_rng(seed)
    ctx = _hered_ctx(psi, positive)
    out = []
    for x in _hered_inputs(psi, samples, rng, positive):
        res = hereditary_sample(psi, x, ctx, positive, a_ab, a_c)
        scale = ctx.norm ** 0.6 * eps ** 0.2 * res["x_norm"]
        rec = {"x_norm": res["x_norm"], "hermitian": res["hermitian"], "dist": res["dist"],
               "omega_gap": res["omega_gap"], "scale": scale}
        # stated budgets carry the factor 2 (4 for arbitrary inputs of a positive map);
        # the sharper factor-1 form applies to self-adjoint inputs
        coef = 4.0 if (positive and not res["hermitian"]) else 2.0
        for key in ("u", "v", "d"):
            b = _budget(key, ctx.norm, res["x_norm"], coef, a_ab, a_c)
            rec[key] = (*_pick(res, key, b), b)
            if res["hermitian"]:
                b1 = _budget(key, ctx.norm, res["x_norm"], 1.0, a_ab, a_c)
                rec[key + "_sharp"] = (*_pick(res, key, b1), b1)
        out.append(rec)
    return out


def required_K(records: list[dict]) -> float:
    """Smallest ``K`` for which every distance and clause residual passes."""
    k = 0.0
    for r in records:
        vals = [r["dist"], r["u"][0], r["v"][0], r["d"][0]]
        if r["scale"] > 0:
            k = max(k, max(vals) / r["scale"])
        elif max(vals) > 1e-9:
            return math.inf
    return k


def check_hereditary_distance(psi: LinMap, eps: float, K: float, samples: int = 16, seed: int = 0,
                              positive: bool = False, refine: bool = True) -> CheckReport:
    """Distance to the hereditary corner and the three factorization clauses.

    With ``positive`` the constant is ``1`` on positive inputs and ``4`` on
    general ones, and norms are ``||psi||_+ = ||psi(1)||``.
    """
    recs = hereditary_records(psi, eps, samples, seed, positive)
    ctx_norm = _hered_ctx(psi, positive).norm
    subs = []

    def const(rec):
        if positive:
            return 1.0 if rec["hermitian"] else 4.0
        return K

    dl = np.array([r["dist"] for r in recs])
    dr = np.array([const(r) * r["scale"] for r in recs])
    if refine:
        # the compression residual overestimates the distance; refine failures
        h = apply(psi, unit(psi.dom))
        p = support_projection(0.5 * (h + h.H))
        xs = _hered_inputs(psi, samples, np.random.default_rng(seed), positive)
        for i in np.flatnonzero(dl > dr + PASS_TOL * np.maximum(1, dr)):
            if psi.cod.dim <= 36:
                dl[i] = min(dl[i], refine_dist_to_corner(apply(psi, xs[i]), p))
    subs.append(worst_report("hereditary/distance", dl, dr, eps=eps, K=K, positive=positive))
    for key in ("u", "v", "d"):
        rl = np.array([r[key][0] for r in recs])
        rr = np.array([const(r) * r["scale"] for r in recs])
        subs.append(worst_report(f"hereditary/{key}-residual", rl, rr, eps=eps, K=K))
        nl = np.array([r[key][1] for r in recs])
        nr = np.array([r[key][2] for r in recs])
        subs.append(worst_report(f"hereditary/{key}-norm", nl, nr))
        sharp = [r[key + "_sharp"] for r in recs if key + "_sharp" in r]
        subs.append(worst_report(f"hereditary/{key}-norm-sharp", [t[1] for t in sharp], [t[2] for t in sharp]))
    gl = np.array([r["omega_gap"] for r in recs if r["hermitian"]])
    gr = np.array([216 * ctx_norm ** 3 * eps * r["x_norm"] ** 5 for r in recs if r["hermitian"]])
    subs.append(worst_report("hereditary/omega", gl, gr, eps=eps))
    return combine("hereditary", subs, eps=eps, K=K, positive=positive)


def estimate_K(entries, samples: int = 16, seed: int = 0) -> float:
    """Smallest constant making the hereditary checks pass on every entry.

    ``entries`` yields ``(psi, eps)`` with ``psi`` self-adjoint; entries with
    ``eps = 0`` carry no information about the constant and are skipped.
    The minimal passing ``K`` is the largest per-sample ratio, which is what
    a bisection would converge to.
    """
    entries = list(entries)
    if not entries:
        raise EmptyCorpus("no maps to estimate from")
    k = 0.0
    for i, (psi, eps) in enumerate(entries):
        if eps <= 0:
            continue
        k = max(k, required_K(hereditary_records(psi, eps, samples, seed + i)))
    return k


def check_dichotomy(psi: LinMap, eps: float, K: float, positive: bool = False, budget: int = 8,
                    seed: int = 0) -> CheckReport:
    """At least one of the small-norm and norm-controlled-by-h branches holds."""
    h = apply(psi, unit(psi.dom))
    hn = h.norm()
    if positive:
        lhs = hn  # positive maps attain ||psi||_+ at the unit
        ra, rb = 166 * math.sqrt(eps), 2 * hn
        ids = ("dichotomy/a'", "dichotomy/b'")
    else:
        lhs = map_norm(psi, budget=budget, seed=seed).value
        c5 = (K + 2) ** 5
        ra, rb = math.sqrt(c5 * eps), c5 * hn
        ids = ("dichotomy/a", "dichotomy/b")
    a = make_report(ids[0], lhs, ra)
    b = make_report(ids[1], lhs, rb)
    pick = a if a.margin >= b.margin else b
    rep = CheckReport("dichotomy", lhs, pick.rhs, pick.margin, a.passed or b.passed,
                      {"eps": eps, "K": K, "positive": positive, "h_norm": hn, "branch": pick.inequality_id},
                      [a, b])
    return rep


# ---------------------------------------------------------------------------
# scalar and matrix inequalities

def check_bks(A, B, alpha: float) -> CheckReport:
    """``||A^alpha - B^alpha|| <= ||A - B||^alpha`` for PSD ``A, B``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    a, b = mc.as_cmat(A), mc.as_cmat(B)
    mc._psd_eig(a, mc.HERM_TOL)
    mc._psd_eig(b, mc.HERM_TOL)
    lhs = mc.op_norm(mc.frac_power(a, alpha, support_cut=False) - mc.frac_power(b, alpha, support_cut=False))
    rhs = mc.op_norm(a - b) ** alpha
    return make_report("bks", lhs, rhs, alpha=alpha)


def gk_model_norm(x, alpha: complex, n_outside: int = 1) -> float:
    """Norm of ``x + alpha 1`` in the unitization of a commutative model.

    ``x`` lists the values on the support points; the model has at least
    one further point where ``x`` vanishes.
    """
    x = np.asarray(x, dtype=complex).ravel()
    vals = np.abs(x + alpha)
    return float(max(vals.max(initial=0.0), abs(alpha) if n_outside > 0 else 0.0))


def check_gaur_kovarik(x, alpha: complex, n_outside: int = 1) -> CheckReport:
    """``||x|| + |alpha| <= 3 ||(x, alpha)||`` in a nonunital commutative model."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 2:
        arr = np.diag(mc.hermitize(arr))
    if np.max(np.abs(arr.imag), initial=0.0) > 1e-12:
        raise NotSelfAdjoint("x must be real-valued")
    lhs = float(np.max(np.abs(arr), initial=0.0)) + abs(alpha)
    rhs = 3 * gk_model_norm(arr, alpha, max(n_outside, 1))
    return make_report("gaur-kovarik", lhs, rhs, ratio=3 * lhs / rhs if rhs else None)


def gk_grid_search(points: int = 2, n: int = 41) -> tuple[float, np.ndarray, float]:
    """Grid search for the largest ratio ``(||x|| + |alpha|) / ||(x, alpha)||``."""
    grid = np.linspace(-2, 2, n)
    best = (0.0, None, 0.0)
    for vals in product(grid, repeat=points - 1):
        for a in grid:
            nrm = gk_model_norm(vals, a)
            if nrm == 0:
                continue
            r = (max(abs(v) for v in vals) + abs(a)) / nrm
            if r > best[0]:
                best = (r, np.array(vals), a)
    return best
