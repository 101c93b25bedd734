"""Finite-dimensional C*-algebras ``M_{n1} + ... + M_{nk}`` and their elements."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import minimize

from . import matcore as mc

# upper bound on sum n_i^2 for a single algebra
MAX_DIM = 400


class ShapeMismatch(ValueError):
    pass


class NotProjection(ValueError):
    pass


@dataclass(frozen=True)
class AlgebraShape:
    blocks: tuple[int, ...]

    def __init__(self, blocks: Sequence[int]):
        b = tuple(int(n) for n in blocks)
        if not b or any(n < 1 for n in b):
            raise ValueError(f"block sizes must be positive, got {blocks!r}")
        if sum(n * n for n in b) > MAX_DIM:
            raise ValueError(f"algebra of dimension {sum(n * n for n in b)} exceeds limit {MAX_DIM}")
        object.__setattr__(self, "blocks", b)

    @property
    def dim(self) -> int:
        """Complex dimension ``sum n_i^2``."""
        return sum(n * n for n in self.blocks)

    @property
    def size(self) -> int:
        """Size of the block-diagonal matrix realization."""
        return sum(self.blocks)

    @property
    def offsets(self) -> list[int]:
        out, acc = [], 0
        for n in self.blocks:
            out.append(acc)
            acc += n * n
        return out

    @property
    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.blocks)

    def transpose_perm(self) -> np.ndarray:
        """Index permutation of the coordinate vector realizing ``x -> x^T``."""
        perm = np.empty(self.dim, dtype=int)
        for off, n in zip(self.offsets, self.blocks):
            idx = np.arange(n * n).reshape(n, n)
            perm[off:off + n * n] = off + idx.T.ravel()
        return perm

    def __repr__(self) -> str:
        return f"AlgebraShape({list(self.blocks)})"


def as_shape(s) -> AlgebraShape:
    return s if isinstance(s, AlgebraShape) else AlgebraShape(s)


class AlgElement:
    """Element of a finite-dimensional C*-algebra, stored blockwise."""

    __slots__ = ("shape", "blocks")

    def __init__(self, shape, blocks):
        shape = as_shape(shape)
        blocks = [np.asarray(b, dtype=complex) for b in blocks]
        if len(blocks) != len(shape.blocks) or any(b.shape != (n, n) for b, n in zip(blocks, shape.blocks)):
            raise ShapeMismatch(f"blocks {[b.shape for b in blocks]} do not match {shape}")
        self.shape = shape
        self.blocks = blocks

    # construction -------------------------------------------------------
    @classmethod
    def from_vec(cls, shape, v) -> "AlgElement":
        shape = as_shape(shape)
        v = np.asarray(v, dtype=complex)
        if v.shape != (shape.dim,):
            raise ShapeMismatch(f"vector of length {v.shape} for {shape}")
        return cls(shape, [v[o:o + n * n].reshape(n, n) for o, n in zip(shape.offsets, shape.blocks)])

    @classmethod
    def from_dense(cls, shape, m) -> "AlgElement":
        """Read the diagonal blocks of a block-diagonal matrix."""
        shape = as_shape(shape)
        m = np.asarray(m, dtype=complex)
        out, i = [], 0
        for n in shape.blocks:
            out.append(m[i:i + n, i:i + n].copy())
            i += n
        return cls(shape, out)

    @classmethod
    def zeros(cls, shape) -> "AlgElement":
        shape = as_shape(shape)
        return cls(shape, [np.zeros((n, n), dtype=complex) for n in shape.blocks])

    # views ----------------------------------------------------------------
    def vec(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])

    def dense(self) -> np.ndarray:
        return block_diag(*self.blocks).astype(complex)

    def norm(self) -> float:
        return max(mc.op_norm(b) for b in self.blocks)

    @property
    def H(self) -> "AlgElement":
        return AlgElement(self.shape, [mc.dagger(b) for b in self.blocks])

    def map_blocks(self, f) -> "AlgElement":
        return AlgElement(self.shape, [f(b) for b in self.blocks])

    def is_hermitian(self, tol: float = mc.HERM_TOL) -> bool:
        return all(mc.herm_defect(b) <= tol * max(mc.op_norm(b), 1e-300) for b in self.blocks)

    # arithmetic -------------------------------------------------------------
    def _check(self, other: "AlgElement"):
        if not isinstance(other, AlgElement) or other.shape != self.shape:
            raise ShapeMismatch(f"{self.shape} vs {getattr(other, 'shape', type(other))}")

    def __add__(self, other):
        self._check(other)
        return AlgElement(self.shape, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check(other)
        return AlgElement(self.shape, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return AlgElement(self.shape, [-a for a in self.blocks])

    def __mul__(self, c):
        if isinstance(c, AlgElement):
            raise TypeError("use @ for the algebra product")
        return AlgElement(self.shape, [c * a for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, c):
        return AlgElement(self.shape, [a / c for a in self.blocks])

    def __matmul__(self, other):
        self._check(other)
        return AlgElement(self.shape, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def __repr__(self) -> str:
        return f"AlgElement({list(self.shape.blocks)}, norm={self.norm():.4g})"


def unit(shape) -> AlgElement:
    shape = as_shape(shape)
    return AlgElement(shape, [np.eye(n, dtype=complex) for n in shape.blocks])


def basis(shape) -> list[AlgElement]:
    """Matrix units in coordinate order."""
    shape = as_shape(shape)
    eye = np.eye(shape.dim, dtype=complex)
    return [AlgElement.from_vec(shape, eye[i]) for i in range(shape.dim)]


def center_basis(shape) -> list[AlgElement]:
    """Block identities; they span the center."""
    shape = as_shape(shape)
    out = []
    for k in range(len(shape.blocks)):
        blocks = [np.eye(n, dtype=complex) if j == k else np.zeros((n, n), dtype=complex)
                  for j, n in enumerate(shape.blocks)]
        out.append(AlgElement(shape, blocks))
    return out


def is_positive(x: AlgElement, tol: float = 1e-9) -> bool:
    for b in x.blocks:
        if mc.herm_defect(b) > tol:
            return False
        if np.linalg.eigvalsh(0.5 * (b + mc.dagger(b)))[0] < -tol:
            return False
    return True


def is_orthogonal_pair(x: AlgElement, y: AlgElement, tol: float = 1e-9) -> bool:
    """``xy = yx = x*y = xy* = 0`` up to ``tol * ||x|| ||y||``."""
    x._check(y)
    bound = tol * x.norm() * y.norm()
    prods = (x @ y, y @ x, x.H @ y, x @ y.H)
    return all(p.norm() <= bound for p in prods)


def is_projection(p: AlgElement, tol: float = 1e-8) -> bool:
    return (p @ p - p).norm() <= tol and (p - p.H).norm() <= tol


def corner_compress(b: AlgElement, p: AlgElement, check: bool = True) -> AlgElement:
    """Compression ``p b p``."""
    b._check(p)
    if check and not is_projection(p):
        raise NotProjection("corner_compress needs a projection")
    return p @ b @ p


def support_projection(h: AlgElement) -> AlgElement:
    return h.map_blocks(mc.support_projection)


def dist_to_hereditary(b: AlgElement, h: AlgElement) -> tuple[float, float]:
    """Two-sided estimate of the distance from ``b`` to the corner ``P A P``.

    ``P`` is the support projection of the Hermitian element ``h``.  The
    upper value is the compression residual ``||b - PbP||``.  The lower
    value is the largest of the three off-corner compressions, each of
    which is a lower bound because compressions are contractive and
    annihilate the corner.
    """
    b._check(h)
    p = support_projection(h)
    q = unit(b.shape) - p
    upper = (b - p @ b @ p).norm()
    lower = max((q @ b @ q).norm(), (q @ b @ p).norm(), (p @ b @ q).norm())
    return upper, lower


def refine_dist_to_corner(b: AlgElement, p: AlgElement, restarts: int = 3, seed: int = 0) -> float:
    """Numerically minimize ``||b - c||`` over ``c`` in the corner ``P A P``.

    Returns the best value found, which is still an upper bound on the
    distance.  Intended for tiny blocks; cost grows quickly with size.
    """
    rng = np.random.default_rng(seed)
    best = (b - p @ b @ p).norm()
    bases = []
    for blk in p.blocks:
        e = np.linalg.eigh(0.5 * (blk + mc.dagger(blk)))
        bases.append(e[1][:, e[0] > 0.5])
    sizes = [v.shape[1] for v in bases]
    npar = 2 * sum(r * r for r in sizes)
    if npar == 0:
        return best

    def unpack(t):
        out, i = [], 0
        for v, r in zip(bases, sizes):
            c = t[i:i + r * r].reshape(r, r) + 1j * t[i + r * r:i + 2 * r * r].reshape(r, r)
            i += 2 * r * r
            out.append(v @ c @ mc.dagger(v))
        return AlgElement(b.shape, out)

    def fun(t):
        return (b - unpack(t)).norm()

    start0 = []
    for v, blk in zip(bases, b.blocks):
        c = mc.dagger(v) @ blk @ v
        start0.extend([c.real.ravel(), c.imag.ravel()])
    t0 = np.concatenate(start0) if start0 else np.zeros(0)
    for k in range(restarts):
        t = t0 if k == 0 else t0 + 0.1 * rng.standard_normal(npar)
        res = minimize(fun, t, method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12})
        best = min(best, float(res.fun))
    return best
