"""Dense complex-matrix kernels.

Everything here is a pure function of numpy arrays: operator norms,
Hermitian eigendecompositions, functional calculus, spectral projections,
Jordan and Cartesian decompositions, and fractional pseudo-powers of
positive semidefinite matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# eigenvalues with |lambda| <= RANK_CUTOFF * ||m|| are treated as zero
RANK_CUTOFF = 1e-10
# relative tolerance for accepting a matrix as Hermitian
HERM_TOL = 1e-8


class NotHermitian(ValueError):
    pass


class NotPSD(ValueError):
    pass


@dataclass(frozen=True)
class HermEig:
    """Eigendecomposition ``m = basis @ diag(eigenvalues) @ basis^*``."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T


def as_cmat(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def op_norm(m) -> float:
    """Largest singular value."""
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def herm_defect(m: np.ndarray) -> float:
    return op_norm(m - dagger(m))


def hermitize(m, tol: float = HERM_TOL) -> np.ndarray:
    """Return ``(m + m^*)/2`` after checking ``||m - m^*|| <= tol * ||m||``."""
    a = as_cmat(m)
    if a.shape[0] != a.shape[1]:
        raise NotHermitian(f"non-square matrix {a.shape}")
    scale = op_norm(a)
    if herm_defect(a) > tol * max(scale, np.finfo(float).tiny):
        raise NotHermitian(f"||m - m*|| = {herm_defect(a):.3e} exceeds tolerance")
    return 0.5 * (a + dagger(a))


def herm_eig(m, tol: float = HERM_TOL) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = hermitize(m, tol)
    w, v = np.linalg.eigh(a)
    return HermEig(w, v)


def func_calc(m, f: Callable[[np.ndarray], np.ndarray], tol: float = HERM_TOL) -> np.ndarray:
    """Apply a real function to a Hermitian matrix through its eigenbasis.

    ``f`` is called once on the vector of eigenvalues and must act
    elementwise.
    """
    e = herm_eig(m, tol)
    vals = np.asarray(f(e.eigenvalues), dtype=complex)
    return (e.basis * vals) @ dagger(e.basis)


def spectral_projection(m, pred: Callable[[np.ndarray], np.ndarray], tol: float = HERM_TOL) -> np.ndarray:
    """Sum of eigenprojections whose eigenvalue satisfies ``pred``.

    ``pred`` receives the eigenvalue vector and returns a boolean mask.
    Boundary ties are decided on the computed eigenvalues, so closed
    predicates such as ``abs(l) <= c`` include eigenvalues equal to ``c``.
    """
    e = herm_eig(m, tol)
    mask = np.asarray(pred(e.eigenvalues), dtype=bool)
    v = e.basis[:, mask]
    return v @ dagger(v)


def jordan_parts(x, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Positive and negative parts ``x = x_plus - x_minus``."""
    e = herm_eig(x, tol)
    w = e.eigenvalues
    v = e.basis
    pos = (v * np.maximum(w, 0.0)) @ dagger(v)
    neg = (v * np.maximum(-w, 0.0)) @ dagger(v)
    return pos, neg


def real_imag(x) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian ``x1, x2`` with ``x = x1 + i x2``."""
    a = as_cmat(x)
    x1 = 0.5 * (a + dagger(a))
    x2 = -0.5j * (a - dagger(a))
    return x1, x2


def _psd_eig(a, tol: float) -> HermEig:
    e = herm_eig(a, tol)
    scale = max(float(np.max(np.abs(e.eigenvalues), initial=0.0)), np.finfo(float).tiny)
    if e.eigenvalues.size and e.eigenvalues[0] < -tol * scale:
        raise NotPSD(f"minimum eigenvalue {e.eigenvalues[0]:.3e} is negative")
    return e


def frac_power(a, alpha: float, support_cut: bool = True, tol: float = HERM_TOL) -> np.ndarray:
    """Fractional power ``a^alpha`` of a PSD matrix.

    With ``support_cut`` (the default) eigenvalues at or below
    ``RANK_CUTOFF * ||a||`` are treated as exact zeros, so negative
    exponents give the inverse power on the support of ``a`` and
    ``frac_power(a, al) @ frac_power(a, -al)`` is the support projection.
    ``alpha = 0`` returns the support projection.  Without the cut the
    plain power ``max(lambda, 0)^alpha`` is used (``alpha`` must then be
    positive).
    """
    e = _psd_eig(a, tol)
    w = np.maximum(e.eigenvalues, 0.0)
    if support_cut:
        keep = w > RANK_CUTOFF * max(float(w.max(initial=0.0)), 0.0)
        vals = np.zeros_like(w)
        vals[keep] = w[keep] ** alpha
    else:
        if alpha <= 0:
            raise ValueError("plain powers need a positive exponent")
        vals = w ** alpha
    return (e.basis * vals) @ dagger(e.basis)


def support_projection(h, tol: float = HERM_TOL) -> np.ndarray:
    """Projection onto the range of a Hermitian matrix."""
    e = herm_eig(h, tol)
    w = e.eigenvalues
    keep = np.abs(w) > RANK_CUTOFF * float(np.max(np.abs(w), initial=0.0))
    v = e.basis[:, keep]
    return v @ dagger(v)


def sign_root(m, p: int, tol: float = HERM_TOL) -> np.ndarray:
    """Real odd root ``sign(t)|t|^(1/p)`` of a Hermitian matrix."""
    return func_calc(m, lambda t: np.sign(t) * np.abs(t) ** (1.0 / p), tol)


def distinct_eigenvalues(h, rel_tol: float = RANK_CUTOFF, tol: float = HERM_TOL) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix with numerical duplicates merged."""
    w = herm_eig(h, tol).eigenvalues
    if w.size == 0:
        return w
    gap = rel_tol * max(float(np.max(np.abs(w))), 1.0)
    out = [w[0]]
    for t in w[1:]:
        if t - out[-1] > gap:
            out.append(t)
    return np.array(out)


def poly_eval(coeffs, m: np.ndarray) -> np.ndarray:
    """Horner evaluation of ``sum_k coeffs[k] m^k``."""
    c = np.asarray(coeffs, dtype=complex)
    n = m.shape[0]
    out = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for a in c[::-1]:
        out = out @ m + a * eye
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
