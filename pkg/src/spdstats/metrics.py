"""Distances between covariance matrices and the Procrustes rotation solver.

Eight metrics are available, addressed through :class:`Metric`:

========================  ============================================
``euclidean``             ``||S1 - S2||``
``log_euclidean``         ``||log S1 - log S2||``
``riemannian``            ``||log(S1^-1/2 S2 S1^-1/2)||``
``cholesky``              ``||chol S1 - chol S2||``
``root_euclidean``        ``||S1^1/2 - S2^1/2||``
``procrustes``            ``inf_R ||L1 - L2 R||`` over ``R in O(k)``
``full_procrustes``       ``inf_{R, b>0} ||L1/||L1|| - b L2 R||``
``power`` (``alpha``)     ``||S1^a - S2^a|| / |a|``
========================  ============================================

All norms are Frobenius.  ``L`` denotes any factor with ``L L^T = S``; the
Procrustes distances do not depend on which factor is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import matcore
from .errors import DegenerateInput, DimMismatch, InvalidInput, NotPositiveDefinite

_ALIASES = {
    "euclidean": "euclidean", "e": "euclidean", "euclid": "euclidean",
    "log_euclidean": "log_euclidean", "logeuclidean": "log_euclidean",
    "log-euclidean": "log_euclidean", "l": "log_euclidean", "logeuclid": "log_euclidean",
    "riemannian": "riemannian", "r": "riemannian", "riemann": "riemannian",
    "cholesky": "cholesky", "c": "cholesky", "chol": "cholesky",
    "root_euclidean": "root_euclidean", "rooteuclidean": "root_euclidean",
    "root-euclidean": "root_euclidean", "h": "root_euclidean", "sqrt": "root_euclidean",
    "procrustes": "procrustes", "s": "procrustes", "procrustes_ss": "procrustes",
    "full_procrustes": "full_procrustes", "fullprocrustes": "full_procrustes",
    "full-procrustes": "full_procrustes", "f": "full_procrustes",
    "power": "power", "a": "power", "power_euclidean": "power",
}

NAMES = (
    "euclidean", "log_euclidean", "riemannian", "cholesky",
    "root_euclidean", "procrustes", "full_procrustes", "power",
)

# Short labels used in the simulation tables.
SYMBOLS = {
    "euclidean": "E", "cholesky": "C", "procrustes": "S", "root_euclidean": "H",
    "log_euclidean": "L", "riemannian": "R", "full_procrustes": "F", "power": "A",
}

# metrics that are undefined for rank-deficient input
_NEEDS_PD = {"log_euclidean", "riemannian", "full_procrustes"}


@dataclass(frozen=True)
class Metric:
    name: str
    alpha: float | None = None

    def __post_init__(self):
        name = _ALIASES.get(str(self.name).lower())
        if name is None:
            raise InvalidInput(f"unknown metric {self.name!r}")
        object.__setattr__(self, "name", name)
        if name == "power":
            if self.alpha is None or not math.isfinite(self.alpha) or self.alpha == 0:
                raise InvalidInput("power metric needs a finite nonzero alpha")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            object.__setattr__(self, "alpha", None)

    @classmethod
    def of(cls, metric, alpha=None) -> "Metric":
        if isinstance(metric, Metric):
            return metric
        return cls(metric, alpha)

    @property
    def symbol(self) -> str:
        return SYMBOLS[self.name]

    @property
    def needs_pd(self) -> bool:
        if self.name in _NEEDS_PD:
            return True
        if self.name == "power":
            return self.alpha < 0
        return False

    def __str__(self):
        if self.name == "power":
            return f"power({self.alpha:g})"
        return self.name


class ProcrustesFit(NamedTuple):
    rotation: np.ndarray
    scale: float
    residual: float


def factor(S, icon: str = "cholesky") -> np.ndarray:
    """A factor ``L`` with ``L L^T = S``.

    The Cholesky icon is used for positive definite input.  Semi-definite
    input falls back to the symmetric square root, which is exact where a
    jittered Cholesky factor would not be.
    """
    if icon == "sqrt":
        return matcore.mat_sqrt(S)
    S = matcore.as_sym(S)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return matcore.mat_sqrt(S)


def _same_dim(A, B):
    if A.shape != B.shape:
        raise DimMismatch(f"dimension mismatch: {A.shape} vs {B.shape}")


def procrustes_rotation(L1, L2, scaling: bool = False) -> ProcrustesFit:
    """Orthogonal ``R`` (reflections allowed) minimising ``||L1 - b L2 R||``.

    With ``L1^T L2 = W diag(s) U^T`` the solution is ``R = U W^T``.  When
    ``scaling`` is set, ``b = sum(s) / ||L2||^2``; otherwise ``b = 1``.
    """
    L1 = matcore.as_square(L1)
    L2 = matcore.as_square(L2)
    _same_dim(L1, L2)
    W, s, Vh = np.linalg.svd(L1.T @ L2)
    R = Vh.T @ W.T
    beta = 1.0
    if scaling:
        n2 = float(np.sum(L2 * L2))
        if n2 == 0.0:
            raise DegenerateInput("cannot scale a zero factor")
        beta = float(np.sum(s)) / n2
        if beta <= 0:
            raise DegenerateInput("optimal scale is not positive")
    residual = float(np.linalg.norm(L1 - beta * L2 @ R))
    return ProcrustesFit(R, beta, residual)


def _check_pair(S1, S2, strict):
    S1 = matcore.check_psd(S1, strict=strict, what="first matrix")
    S2 = matcore.check_psd(S2, strict=strict, what="second matrix")
    if S1.ndim != 2:
        raise InvalidInput("distance takes single matrices")
    _same_dim(S1, S2)
    return S1, S2


def _riemannian(S1, S2):
    lam = scipy.linalg.eigh(S2, S1, eigvals_only=True)
    if np.any(lam <= 0):
        raise NotPositiveDefinite("generalized eigenvalues not positive")
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def _full_procrustes(S1, S2):
    L1 = factor(S1)
    L2 = factor(S2)
    n1 = np.linalg.norm(L1)
    if n1 == 0 or np.linalg.norm(L2) == 0:
        raise DegenerateInput("full Procrustes distance of a zero matrix")
    fit = procrustes_rotation(L1 / n1, L2, scaling=True)
    return fit.residual


def distance(S1, S2, metric="euclidean", alpha=None) -> float:
    """Distance between two covariance matrices under ``metric``."""
    m = Metric.of(metric, alpha)
    S1, S2 = _check_pair(S1, S2, m.needs_pd)
    name = m.name
    if name == "euclidean":
        return float(np.linalg.norm(S1 - S2))
    if name == "log_euclidean":
        return float(np.linalg.norm(matcore.mat_log(S1) - matcore.mat_log(S2)))
    if name == "riemannian":
        return _riemannian(S1, S2)
    if name == "cholesky":
        return float(np.linalg.norm(
            matcore.cholesky(S1, strict=False) - matcore.cholesky(S2, strict=False)))
    if name == "root_euclidean":
        return float(np.linalg.norm(matcore.mat_sqrt(S1) - matcore.mat_sqrt(S2)))
    if name == "procrustes":
        return procrustes_rotation(factor(S1), factor(S2)).residual
    if name == "full_procrustes":
        return _full_procrustes(S1, S2)
    # power
    a = m.alpha
    return float(np.linalg.norm(matcore.mat_pow(S1, a) - matcore.mat_pow(S2, a)) / abs(a))


def pairwise_procrustes(L: np.ndarray, D: np.ndarray):
    """Rotations matching each ``L[i]`` onto ``D``, vectorised over ``i``.

    Returns ``(R, s)`` with ``R[i]`` minimising ``||D - L[i] R||`` and ``s[i]``
    the singular values of ``D^T L[i]``.
    """
    W, s, Vh = np.linalg.svd(D.T @ L)
    R = np.swapaxes(Vh, -1, -2) @ np.swapaxes(W, -1, -2)
    return R, s
