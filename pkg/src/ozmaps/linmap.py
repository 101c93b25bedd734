"""Linear maps between finite-dimensional C*-algebras.

A map is stored as its action matrix on the concatenated row-major
coordinates of the domain blocks.  Norms on both sides are operator norms
(maximum over blocks), so the action matrix's own spectral norm is not the
map norm; :func:`norm_upper` gives certified upper bounds and
:func:`map_norm` gives witnessed lower bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import matcore as mc
from .algebra import AlgElement, AlgebraShape, ShapeMismatch, as_shape, basis, unit


class LinMap:
    __slots__ = ("dom", "cod", "action")

    def __init__(self, dom, cod, action):
        dom, cod = as_shape(dom), as_shape(cod)
        a = np.asarray(action, dtype=complex)
        if a.shape != (cod.dim, dom.dim):
            raise ShapeMismatch(f"action {a.shape} for {dom} -> {cod}")
        self.dom, self.cod, self.action = dom, cod, a

    @classmethod
    def from_function(cls, dom, cod, f: Callable[[AlgElement], AlgElement]) -> "LinMap":
        dom, cod = as_shape(dom), as_shape(cod)
        cols = [f(e).vec() for e in basis(dom)]
        return cls(dom, cod, np.stack(cols, axis=1))

    @classmethod
    def zero(cls, dom, cod) -> "LinMap":
        dom, cod = as_shape(dom), as_shape(cod)
        return cls(dom, cod, np.zeros((cod.dim, dom.dim), dtype=complex))

    @classmethod
    def identity(cls, shape) -> "LinMap":
        shape = as_shape(shape)
        return cls(shape, shape, np.eye(shape.dim, dtype=complex))

    def __call__(self, x: AlgElement) -> AlgElement:
        return apply(self, x)

    def _check(self, other: "LinMap"):
        if other.dom != self.dom or other.cod != self.cod:
            raise ShapeMismatch("maps have different domain or codomain")

    def __add__(self, other):
        self._check(other)
        return LinMap(self.dom, self.cod, self.action + other.action)

    def __sub__(self, other):
        self._check(other)
        return LinMap(self.dom, self.cod, self.action - other.action)

    def __mul__(self, c):
        return LinMap(self.dom, self.cod, c * self.action)

    __rmul__ = __mul__

    def hs_adjoint_apply(self, w: AlgElement) -> AlgElement:
        """Hilbert-Schmidt adjoint: ``<phi(x), w> = <x, phi^dag(w)>``."""
        return AlgElement.from_vec(self.dom, self.action.conj().T @ w.vec())

    def __repr__(self) -> str:
        return f"LinMap({list(self.dom.blocks)} -> {list(self.cod.blocks)})"


@dataclass
class NormEstimate:
    value: float
    witness: AlgElement
    exact: bool


def apply(m: LinMap, x: AlgElement) -> AlgElement:
    if x.shape != m.dom:
        raise ShapeMismatch(f"{x.shape} is not the domain {m.dom}")
    return AlgElement.from_vec(m.cod, m.action @ x.vec())


def apply_batch(m: LinMap, vecs: np.ndarray) -> list[np.ndarray]:
    """Apply to the columns of ``vecs``; returns one ``(S, n, n)`` array per codomain block."""
    out = m.action @ vecs
    res = []
    for off, n in zip(m.cod.offsets, m.cod.blocks):
        res.append(out[off:off + n * n].T.reshape(-1, n, n))
    return res


def compose_left(u: AlgElement, m: LinMap, v: AlgElement) -> LinMap:
    """The map ``x -> u phi(x) v``."""
    return LinMap.from_function(m.dom, m.cod, lambda x: u @ apply(m, x) @ v)


def adjoint_map(m: LinMap) -> LinMap:
    """``phi^*(x) = phi(x^*)^*``, computed by an exact index permutation."""
    pc = m.cod.transpose_perm()
    pd = m.dom.transpose_perm()
    return LinMap(m.dom, m.cod, np.conj(m.action)[pc][:, pd])


def selfadjointify(m: LinMap) -> LinMap:
    """``(phi + phi^*)/2``."""
    a = adjoint_map(m)
    return LinMap(m.dom, m.cod, 0.5 * (m.action + a.action))


def is_self_adjoint(m: LinMap, tol: float = 0.0) -> bool:
    d = np.max(np.abs(m.action - adjoint_map(m).action), initial=0.0)
    return bool(d <= tol)


# ---------------------------------------------------------------------------
# norms

def norm_upper(m: LinMap, cp_tol: float = 1e-10) -> float:
    """Certified upper bound for the operator norm of ``m``.

    Minimum of three valid bounds:
      * ``sigma_max(action) * sqrt(sum n_i)`` from
        ``||y|| <= ||y||_F`` and ``||x||_F <= sqrt(sum n_i) ||x||``;
      * ``sum_b ||phi(E_b)||`` since matrix-unit coefficients are bounded
        by ``||x||``;
      * ``||phi(1)||`` when the map is completely positive (Russo-Dye).
    """
    if not np.any(m.action):
        return 0.0
    b1 = float(np.linalg.norm(m.action, 2)) * np.sqrt(m.dom.size)
    cols = apply_batch(m, np.eye(m.dom.dim, dtype=complex))
    col_norms = np.zeros(m.dom.dim)
    for blk in cols:
        col_norms = np.maximum(col_norms, np.linalg.norm(blk, 2, axis=(1, 2)))
    b2 = float(col_norms.sum())
    best = min(b1, b2)
    if is_completely_positive(m, cp_tol):
        best = min(best, apply(m, unit(m.dom)).norm() * (1 + 1e-12))
    return best


def _top_dual(y: AlgElement) -> tuple[float, AlgElement]:
    """Value ``||y||`` and the rank-one norming element ``u v^*`` in the top block."""
    best, k_best, pair = -1.0, 0, None
    for k, b in enumerate(y.blocks):
        u, s, vh = np.linalg.svd(b)
        if s[0] > best:
            best, k_best, pair = float(s[0]), k, (u[:, 0], vh[0].conj())
    blocks = [np.zeros_like(b) for b in y.blocks]
    blocks[k_best] = np.outer(pair[0], pair[1].conj())
    return best, AlgElement(y.shape, blocks)


def _polar_unitary(g: AlgElement) -> AlgElement:
    def pu(b):
        u, _, vh = np.linalg.svd(b)
        return u @ vh
    return g.map_blocks(pu)


def _pos_projection(g: AlgElement) -> AlgElement:
    def pp(b):
        w, v = np.linalg.eigh(0.5 * (b + mc.dagger(b)))
        v = v[:, w > 0]
        return v @ mc.dagger(v)
    return g.map_blocks(pp)


def random_unitary_element(shape: AlgebraShape, rng: np.random.Generator) -> AlgElement:
    from scipy.stats import unitary_group
    blocks = []
    for n in shape.blocks:
        blocks.append(unitary_group.rvs(n, random_state=rng) if n > 1
                      else np.array([[np.exp(2j * np.pi * rng.random())]]))
    return AlgElement(shape, blocks)


def _ascent(m: LinMap, x: AlgElement, step, iters: int) -> tuple[float, AlgElement]:
    best_val = apply(m, x).norm() / max(x.norm(), 1e-300)
    best_x = x
    for _ in range(iters):
        val, w = _top_dual(apply(m, best_x))
        if val == 0.0:
            break
        x_new = step(m.hs_adjoint_apply(w))
        nx = x_new.norm()
        if nx == 0.0:
            break
        v_new = apply(m, x_new).norm() / nx
        if v_new <= best_val * (1 + 1e-13):
            break
        best_val, best_x = v_new, x_new
    return best_val, best_x


def _norm_search(m: LinMap, starts: list[AlgElement], step, iters: int) -> NormEstimate:
    vals = []
    best = (-1.0, None)
    for x0 in starts:
        v, x = _ascent(m, x0, step, iters)
        vals.append(v)
        if v > best[0]:
            best = (v, x)
    vals = sorted(vals, reverse=True)
    exact = len(vals) > 1 and vals[0] - vals[1] <= 1e-6 * max(1.0, vals[0])
    return NormEstimate(float(best[0]), best[1], bool(exact))


def map_norm(m: LinMap, budget: int = 8, seed: int = 0, iters: int = 50) -> NormEstimate:
    """Witnessed lower bound for ``||phi||`` by dual ascent over unitaries.

    Each step takes the norming functional of ``phi(x)`` and moves ``x`` to
    the unitary polar factor of its pull-back, which never decreases the
    objective.  ``budget`` random unitary starts are used together with the
    unit.
    """
    rng = np.random.default_rng(seed)
    starts = [unit(m.dom)] + [random_unitary_element(m.dom, rng) for _ in range(budget)]
    if not np.any(m.action):
        return NormEstimate(0.0, starts[0], True)
    return _norm_search(m, starts, _polar_unitary, iters)


def map_norm_pos(m: LinMap, budget: int = 8, seed: int = 0, iters: int = 50) -> NormEstimate:
    """Witnessed lower bound for ``sup{||phi(x)|| : 0 <= x <= 1}``.

    Same ascent as :func:`map_norm`, with iterates kept among projections
    (the extreme points of the positive unit ball).
    """
    rng = np.random.default_rng(seed)
    starts = [unit(m.dom)]
    for _ in range(budget):
        u = random_unitary_element(m.dom, rng)
        mask = [np.diag(rng.random(n) < 0.5).astype(complex) for n in m.dom.blocks]
        starts.append(u @ AlgElement(m.dom, mask) @ u.H)
    starts = [s for s in starts if s.norm() > 0] or [unit(m.dom)]
    if not np.any(m.action):
        return NormEstimate(0.0, starts[0], True)
    return _norm_search(m, starts, _pos_projection, iters)


def choi_matrices(m: LinMap) -> list[np.ndarray]:
    """Choi matrix ``sum_ij E_ij (x) phi(E_ij)`` for each domain block."""
    out = []
    cod_size = m.cod.size
    for k, (off, n) in enumerate(zip(m.dom.offsets, m.dom.blocks)):
        c = np.zeros((n * cod_size, n * cod_size), dtype=complex)
        for i in range(n):
            for j in range(n):
                col = m.action[:, off + i * n + j]
                img = AlgElement.from_vec(m.cod, col).dense()
                c[i * cod_size:(i + 1) * cod_size, j * cod_size:(j + 1) * cod_size] = img
        out.append(c)
    return out


def is_completely_positive(m: LinMap, tol: float = 1e-9) -> bool:
    """Choi criterion applied blockwise on the domain."""
    for c in choi_matrices(m):
        if mc.herm_defect(c) > tol * max(1.0, mc.op_norm(c)):
            return False
        w = np.linalg.eigvalsh(0.5 * (c + mc.dagger(c)))
        if w[0] < -tol * max(1.0, float(np.max(np.abs(w)))):
            return False
    return True


def unital_extend(m: LinMap, z0: AlgElement) -> LinMap:
    """Extend by one coordinate for an adjoined unit: ``x + a 1 -> phi(x) + a z0``.

    The new domain has an extra ``1 x 1`` block holding the coefficient of
    the adjoined unit.  Involution agrees with the unitization, so
    self-adjointness defects are measured correctly.
    """
    if z0.shape != m.cod:
        raise ShapeMismatch("z0 must live in the codomain")
    dom = AlgebraShape(list(m.dom.blocks) + [1])
    return LinMap(dom, m.cod, np.concatenate([m.action, z0.vec()[:, None]], axis=1))
