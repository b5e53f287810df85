"""Dense symmetric linear algebra for small k x k matrices.

Everything here is a pure function on numpy arrays.  Functions accept a
single matrix of shape ``(k, k)`` and, where noted, a stack of shape
``(..., k, k)``; spectral functions operate on the last two axes.

The eigensolver is LAPACK's symmetric driver (``numpy.linalg.eigh``) with a
deterministic sign convention layered on top: each eigenvector column has
its largest-magnitude entry positive (first such row on ties).
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    InvalidInput,
    NotDiagonalizable,
    NotPositiveDefinite,
    NotPositiveSemidefinite,
    Overflow,
    SingularMatrix,
)

TOL_RECON = 1e-9
TOL_ORTHO = 1e-9
_PSD_REL = 1e-10
# exp(x) overflows a double beyond this
_EXP_MAX = math.log(np.finfo(float).max)


class JitterWarning(UserWarning):
    """A semi-definite matrix was jittered to obtain a Cholesky factor."""


class EigenDecomp(NamedTuple):
    vectors: np.ndarray  # columns are eigenvectors
    values: np.ndarray  # descending

    def reconstruct(self) -> np.ndarray:
        return _compose(self.vectors, self.values)


def psd_tol(values) -> np.ndarray:
    """Eigenvalue band treated as zero: 1e-10 * max(|lambda|_max, 1)."""
    values = np.asarray(values, dtype=float)
    scale = np.max(np.abs(values), axis=-1) if values.size else np.float64(0.0)
    return _PSD_REL * np.maximum(scale, 1.0)


def as_square(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2] or X.shape[-1] == 0:
        raise InvalidInput(f"expected square matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("matrix has non-finite entries")
    return X


def as_sym(S) -> np.ndarray:
    """Validate a (stack of) symmetric matrix and return it exactly symmetric."""
    S = as_square(S)
    St = np.swapaxes(S, -1, -2)
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - St)) > 1e-8 * scale:
        raise InvalidInput("matrix is not symmetric")
    return (S + St) / 2


def is_psd(S, strict: bool = False) -> bool:
    lam = sym_eigen(S).values
    tol = psd_tol(lam)
    if strict:
        return bool(np.all(lam[..., -1] > tol))
    return bool(np.all(lam[..., -1] >= -tol))


def rank(S) -> int:
    lam = sym_eigen(S).values
    return int(np.sum(lam > psd_tol(lam)))


def check_psd(S, strict: bool = False, what: str = "matrix") -> np.ndarray:
    """Return the symmetrized input, raising if it is not (strictly) PSD."""
    S = as_sym(S)
    lam = sym_eigen(S).values
    tol = psd_tol(lam)
    low = lam[..., -1]
    if np.any(low < -tol):
        bad = float(np.min(low))
        raise NotPositiveSemidefinite(
            f"{what} has negative eigenvalue {bad:.6g}", eigenvalue=bad
        )
    if strict and np.any(low <= tol):
        raise NotPositiveDefinite(f"{what} is not strictly positive definite")
    return S


def _compose(U: np.ndarray, lam: np.ndarray) -> np.ndarray:
    out = (U * lam[..., None, :]) @ np.swapaxes(U, -1, -2)
    return (out + np.swapaxes(out, -1, -2)) / 2


def sym_eigen(S) -> EigenDecomp:
    """Spectral decomposition ``S = U diag(lam) U^T`` with ``lam`` descending."""
    S = as_sym(S)
    lam, U = np.linalg.eigh(S)
    lam = lam[..., ::-1]
    U = U[..., ::-1]
    # sign convention: largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(U), axis=-2)
    pivot = np.take_along_axis(U, idx[..., None, :], axis=-2)
    U = U * np.where(pivot < 0, -1.0, 1.0)
    return EigenDecomp(U, lam)


def spectral_apply(S, fn) -> np.ndarray:
    """``U fn(lam) U^T`` for a symmetric input."""
    U, lam = sym_eigen(S)
    return _compose(U, fn(lam))


def mat_log(S) -> np.ndarray:
    U, lam = sym_eigen(S)
    if np.any(lam[..., -1] <= psd_tol(lam)):
        raise NotPositiveDefinite("matrix logarithm needs a positive definite input")
    return _compose(U, np.log(lam))


def mat_exp(Y) -> np.ndarray:
    U, lam = sym_eigen(Y)
    if np.any(lam[..., 0] > _EXP_MAX):
        raise Overflow(f"exp overflows for eigenvalue {float(np.max(lam)):.6g}")
    return _compose(U, np.exp(lam))


def _psd_spectrum(S):
    U, lam = sym_eigen(S)
    tol = psd_tol(lam)
    low = lam[..., -1]
    if np.any(low < -tol):
        bad = float(np.min(low))
        raise NotPositiveSemidefinite(
            f"matrix has negative eigenvalue {bad:.6g}", eigenvalue=bad
        )
    lam = np.where(np.abs(lam) <= tol[..., None], 0.0, lam)
    return U, lam


def mat_pow(S, alpha: float) -> np.ndarray:
    """``S^alpha = U diag(lam^alpha) U^T``.

    Positive powers accept PSD input (``0^alpha = 0``); negative powers need
    every eigenvalue strictly positive.
    """
    alpha = float(alpha)
    if alpha == 0.0 or not math.isfinite(alpha):
        raise InvalidInput("power must be finite and nonzero")
    if alpha == 1.0:
        return as_sym(S)
    U, lam = _psd_spectrum(S)
    if alpha < 0:
        if np.any(lam <= 0):
            raise SingularMatrix("negative power of a singular matrix")
        return _compose(U, lam**alpha)
    return _compose(U, np.power(lam, alpha))


def mat_sqrt(S) -> np.ndarray:
    U, lam = _psd_spectrum(S)
    return _compose(U, np.sqrt(lam))


def mat_inv_sqrt(S) -> np.ndarray:
    return mat_pow(S, -0.5)


def cholesky(S, strict: bool = True) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = S`` and positive diagonal.

    With ``strict=False`` a semi-definite input is jittered by ``psd_tol`` on
    the diagonal and a :class:`JitterWarning` is emitted.
    """
    S = as_sym(S)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        if strict:
            raise NotPositiveDefinite("Cholesky factor needs a positive definite input") from None
    S = check_psd(S)
    lam = sym_eigen(S).values
    eps = psd_tol(lam)
    k = S.shape[-1]
    J = S + np.asarray(eps)[..., None, None] * np.eye(k)
    try:
        L = np.linalg.cholesky(J)
    except np.linalg.LinAlgError:
        # eigenvalues inside the tolerance band but still failing: widen once
        L = np.linalg.cholesky(S + 10 * np.asarray(eps)[..., None, None] * np.eye(k))
    warnings.warn("semi-definite input jittered for Cholesky factor", JitterWarning, stacklevel=2)
    return L


def svd(X):
    """``X = W diag(sigma) U^T`` with ``sigma`` descending and nonnegative."""
    X = as_square(X)
    W, sigma, Vh = np.linalg.svd(X)
    return W, sigma, np.swapaxes(Vh, -1, -2)


def helmert_submatrix(k: int) -> np.ndarray:
    """The k x (k+1) Helmert sub-matrix: orthonormal rows summing to zero."""
    if k < 1:
        raise InvalidInput("k must be positive")
    H = np.zeros((k, k + 1))
    for j in range(1, k + 1):
        h = -1.0 / math.sqrt(j * (j + 1))
        H[j - 1, :j] = h
        H[j - 1, j] = -j * h
    return H


def frobenius_norm(X) -> float | np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.sqrt(np.sum(X * X, axis=(-2, -1)))


def triangular_log(T) -> np.ndarray:
    """Real logarithm of a triangular matrix with positive diagonal.

    Goes through an eigendecomposition, so the matrix must be diagonalizable
    with a reasonably conditioned eigenbasis.
    """
    T = as_square(T)
    d = np.diag(T)
    if np.any(d <= 0):
        raise NotPositiveDefinite("triangular log needs a positive diagonal")
    if np.allclose(T, np.diag(d)):
        return np.diag(np.log(d))
    w, V = np.linalg.eig(T)
    if np.linalg.cond(V) > 1e8:
        raise NotDiagonalizable("triangular matrix has a defective eigenbasis")
    out = V @ np.diag(np.log(w)) @ np.linalg.inv(V)
    return np.real(out)


def general_exp(X) -> np.ndarray:
    """Matrix exponential of a general (non-symmetric) square matrix."""
    X = as_square(X)
    return scipy.linalg.expm(X)


def random_orthogonal(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of O(k)."""
    Z = rng.standard_normal((k, k))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def random_spd(k: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random strictly positive definite matrix with log-eigenvalues in [-spread, spread]."""
    V = random_orthogonal(k, rng)
    lam = np.exp(rng.uniform(-spread, spread, size=k))
    return _compose(V, lam)
