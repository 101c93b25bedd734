"""Witnessed lower bounds for the order-zero, self-adjointness and Jordan defects."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import matcore as mc
from .algebra import AlgElement, unit
from .linmap import LinMap, _top_dual, adjoint_map, apply, map_norm, random_unitary_element

# commutative domains with at most this many points get exhaustive enumeration
ENUM_MAX = 7


@dataclass
class DefectReport:
    kind: str  # "order-zero" | "self-adjoint" | "jordan"
    value: float
    witness: tuple
    strategy: str
    samples: int
    extra: dict = field(default_factory=dict)


def oz_value(m: LinMap, x: AlgElement, y: AlgElement) -> float:
    nx, ny = x.norm(), y.norm()
    if nx == 0 or ny == 0:
        return 0.0
    return (apply(m, x) @ apply(m, y)).norm() / (nx * ny)


def sa_value(m: LinMap, x: AlgElement) -> float:
    nx = x.norm()
    if nx == 0:
        return 0.0
    return (apply(m, x.H) - apply(m, x).H).norm() / nx


def jordan_value(m: LinMap, x: AlgElement) -> float:
    nx = x.norm()
    if nx == 0:
        return 0.0
    px = apply(m, x)
    return (px @ px - apply(m, x @ x)).norm() / nx ** 2


def _proj_below(g: AlgElement, q: AlgElement) -> AlgElement:
    """Projection onto the positive spectral part of ``q Herm(g) q``."""
    def pp(b, qb):
        hb = qb @ (0.5 * (b + mc.dagger(b))) @ qb
        w, v = np.linalg.eigh(0.5 * (hb + mc.dagger(hb)))
        v = v[:, w > 1e-14 * max(1.0, float(np.max(np.abs(w))))]
        return v @ mc.dagger(v)
    return AlgElement(g.shape, [pp(b, qb) for b, qb in zip(g.blocks, q.blocks)])


def _complement_support(x: AlgElement) -> AlgElement:
    def cs(b):
        w, v = np.linalg.eigh(0.5 * (b + mc.dagger(b)))
        v = v[:, w <= 1e-12 * max(1.0, float(np.max(np.abs(w), initial=0.0)))]
        return v @ mc.dagger(v)
    return x.map_blocks(cs)


def _oz_ascent(m: LinMap, x: AlgElement, y: AlgElement, iters: int):
    best = oz_value(m, x, y)
    for _ in range(iters):
        px, py = apply(m, x), apply(m, y)
        val, w = _top_dual(px @ py)
        if val == 0.0:
            break
        # pull back the norming functional through phi(.) phi(y), then phi(x) phi(.)
        gx = m.hs_adjoint_apply(w @ py.H)
        x_new = _proj_below(gx, _complement_support(y))
        if x_new.norm() == 0:
            break
        gy = m.hs_adjoint_apply(apply(m, x_new).H @ w)
        y_new = _proj_below(gy, _complement_support(x_new))
        if y_new.norm() == 0:
            break
        v = oz_value(m, x_new, y_new)
        if v <= best * (1 + 1e-13):
            break
        best, x, y = v, x_new, y_new
    return best, x, y


def _random_orthogonal_pair(shape, rng):
    u = random_unitary_element(shape, rng)
    xs, ys = [], []
    for n in shape.blocks:
        lab = rng.integers(0, 3, size=n)  # 0: neither, 1: x, 2: y
        xs.append(np.diag(np.where(lab == 1, rng.uniform(0.2, 1.0, n), 0.0)).astype(complex))
        ys.append(np.diag(np.where(lab == 2, rng.uniform(0.2, 1.0, n), 0.0)).astype(complex))
    x = u @ AlgElement(shape, xs) @ u.H
    y = u @ AlgElement(shape, ys) @ u.H
    return x, y


def _oz_enumerate(m: LinMap):
    """All disjoint pairs of indicator functions on a commutative domain."""
    k = m.dom.dim
    cols = [AlgElement.from_vec(m.cod, m.action[:, i]).dense() for i in range(k)]
    best, wit = 0.0, None
    for lab in product(range(3), repeat=k):
        lab = np.array(lab)
        if not (np.any(lab == 1) and np.any(lab == 2)):
            continue
        a = sum((cols[i] for i in np.flatnonzero(lab == 1)), np.zeros_like(cols[0]))
        b = sum((cols[i] for i in np.flatnonzero(lab == 2)), np.zeros_like(cols[0]))
        v = mc.op_norm(a @ b)
        if v > best:
            best, wit = v, lab
    if wit is None:
        return 0.0, None
    x = AlgElement.from_vec(m.dom, (wit == 1).astype(complex))
    y = AlgElement.from_vec(m.dom, (wit == 2).astype(complex))
    return best, (x, y)


def oz_defect(m: LinMap, budget: int = 12, seed: int = 0, iters: int = 30) -> DefectReport:
    """Lower bound for ``sup ||phi(x)phi(y)||`` over positive contractions with ``xy = 0``.

    Random pairs sharing an eigenbasis with disjoint eigen-slot supports are
    improved by alternating ascent: with one element fixed the objective
    is convex in the other, so each half-step jumps to a projection below
    the complement of the fixed element's support.  Commutative domains with
    few points are enumerated exhaustively instead.
    """
    zero = AlgElement.zeros(m.dom)
    if m.dom.is_commutative and m.dom.dim <= ENUM_MAX:
        val, wit = _oz_enumerate(m)
        wit = wit or (zero, zero)
        return DefectReport("order-zero", float(val), wit, "enumerate", 3 ** m.dom.dim)
    rng = np.random.default_rng(seed)
    best, wit = 0.0, (zero, zero)
    for _ in range(budget):
        x, y = _random_orthogonal_pair(m.dom, rng)
        if x.norm() == 0 or y.norm() == 0:
            continue
        v, x, y = _oz_ascent(m, x, y, iters)
        if v > best:
            best, wit = v, (x, y)
    return DefectReport("order-zero", float(best), wit, "alternating-ascent", budget)


def sa_defect(m: LinMap, budget: int = 8, seed: int = 0) -> DefectReport:
    """Lower bound for ``sup ||phi(x*) - phi(x)*|| / ||x||``."""
    diff = LinMap(m.dom, m.cod, m.action - adjoint_map(m).action)
    est = map_norm(diff, budget=budget, seed=seed)
    val = sa_value(m, est.witness)
    return DefectReport("self-adjoint", float(val), (est.witness,), "dual-ascent", budget + 1)


def _jordan_grad(m: LinMap, x: AlgElement) -> tuple[float, AlgElement]:
    px = apply(m, x)
    d = px @ px - apply(m, x @ x)
    val, w = _top_dual(d)
    # derivative of Re tr(W* (phi(x)^2 - phi(x^2))) in direction e
    g = m.hs_adjoint_apply(w @ px.H + px.H @ w)
    pw = m.hs_adjoint_apply(w)
    g = g - (pw @ x.H + x.H @ pw)
    return val, g


def _jordan_ascent(m: LinMap, x: AlgElement, hermitian: bool, iters: int):
    x = x / x.norm()
    best = jordan_value(m, x)
    step = 0.5
    for _ in range(iters):
        _, g = _jordan_grad(m, x)
        if hermitian:
            g = 0.5 * (g + g.H)
        gn = g.norm()
        if gn == 0:
            break
        improved = False
        while step > 1e-6:
            cand = x + (step / gn) * g
            cand = cand / cand.norm()
            v = jordan_value(m, cand)
            if v > best:
                best, x, improved = v, cand, True
                step = min(2 * step, 1.0)
                break
            step *= 0.5
        if not improved:
            break
    return best, x


def jordan_defect(m: LinMap, budget: int = 8, seed: int = 0, iters: int = 40) -> DefectReport:
    """Lower bound for ``sup ||phi(x)^2 - phi(x^2)||`` over the unit ball.

    Hermitian starts (unit, random symmetries, random Hermitian contractions)
    are ascended along Hermitian directions, then general starts along all
    directions.
    """
    rng = np.random.default_rng(seed)
    starts = [(unit(m.dom), True)]
    for _ in range(budget):
        u = random_unitary_element(m.dom, rng)
        signs = [np.diag(rng.choice([-1.0, 1.0], n)).astype(complex) for n in m.dom.blocks]
        starts.append((u @ AlgElement(m.dom, signs) @ u.H, True))
        starts.append((random_unitary_element(m.dom, rng), False))
    best, wit = -1.0, None
    for x0, herm in starts:
        v, x = _jordan_ascent(m, x0, herm, iters)
        if v > best:
            best, wit = v, x
    return DefectReport("jordan", float(jordan_value(m, wit)), (wit,), "gradient-ascent", len(starts))
