"""Principal components of covariance matrices in Procrustes tangent coordinates.

The pole is the Procrustes mean factor ``D``.  Each sample ``S_i`` with
Cholesky factor ``L_i`` gets coordinates ``V_i = D - L_i R_i`` where ``R_i``
rotates ``L_i`` onto ``D``.  PCA is done on ``vec(V_i)`` (column-major) with
the second-moment matrix ``(1/n) sum vec(V_i) vec(V_i)^T``; no extra
centring is applied since the coordinates are already deviations from the
pole.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matcore
from .errors import InvalidComponent, InvalidInput
from .means import MeanConfig, gpa
from .metrics import Metric, factor, procrustes_rotation


class TangentSample(NamedTuple):
    pole: np.ndarray
    coords: np.ndarray
    rotation: np.ndarray
    source_index: int


def vec(V) -> np.ndarray:
    """Column-major stacking of a matrix (or of each matrix in a stack)."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 2:
        return V.reshape(-1, order="F")
    return np.swapaxes(V, -1, -2).reshape(V.shape[0], -1)


def unvec(v, k: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if k is None:
        k = int(round(np.sqrt(v.size)))
    if v.size != k * k:
        raise InvalidInput(f"vector of length {v.size} is not a {k}x{k} matrix")
    return v.reshape((k, k), order="F")


def tangent_coords(pole, samples) -> list[TangentSample]:
    """Procrustes tangent coordinates of ``samples`` at factor ``pole``."""
    pole = matcore.as_square(pole)
    S = np.asarray(samples, dtype=float)
    if S.ndim == 2:
        S = S[None]
    if S.shape[1:] != pole.shape:
        raise InvalidInput(f"samples of shape {S.shape[1:]} do not match pole {pole.shape}")
    out = []
    for i, s in enumerate(S):
        L = factor(matcore.check_psd(s, what="sample"))
        R = procrustes_rotation(pole, L).rotation
        out.append(TangentSample(pole, pole - L @ R, R, i))
    return out


def horizontal_residual(pole, T) -> float:
    """``||pole^T T - T^T pole||``; zero iff ``T`` is horizontal at ``pole``.

    Rotations act on factors from the right (``L -> L R``), so the vertical
    directions at ``pole`` are ``pole A`` with ``A`` antisymmetric.  ``T`` is
    orthogonal to all of them exactly when ``pole^T T`` is symmetric.
    """
    pole = matcore.as_square(pole)
    T = matcore.as_square(T)
    if pole.shape != T.shape:
        raise InvalidInput("pole and tangent must have the same shape")
    X = pole.T @ T
    return float(np.linalg.norm(X - X.T))


@dataclass
class PcaModel:
    pole: np.ndarray
    loadings: np.ndarray  # (k*k, p), columns are unit loading vectors
    variances: np.ndarray  # (p,), descending
    scores: np.ndarray  # (n, p)
    coords: np.ndarray  # (n, k, k) tangent coordinates
    total_variance: float

    @property
    def p(self) -> int:
        return self.variances.size

    @property
    def k(self) -> int:
        return self.pole.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.pole @ self.pole.T

    def explained(self) -> np.ndarray:
        """Fraction of the total tangent second moment per component."""
        if self.total_variance == 0:
            return np.zeros(0)
        return self.variances / self.total_variance


def fit_pca(samples, config: MeanConfig | None = None) -> PcaModel:
    """Procrustes mean, tangent coordinates and their principal components."""
    S = np.asarray(samples, dtype=float)
    if S.ndim != 3 or S.shape[0] < 2:
        raise InvalidInput("PCA needs at least two samples")
    config = config or MeanConfig(Metric("procrustes"))
    L = np.stack([factor(matcore.check_psd(s, what="sample")) for s in S])
    res = gpa(L, weights=config.weights, max_iter=config.max_iter, tol=config.tol)
    pole = res.factor
    V = pole - L @ res.rotations
    X = vec(V)
    n, k = S.shape[0], S.shape[1]
    Sv = X.T @ X / n
    U, lam = matcore.sym_eigen(Sv)
    keep = lam > matcore.psd_tol(lam)
    keep &= np.arange(lam.size) < min(n - 1, k * (k + 1) // 2)
    G = U[:, keep]
    lam = lam[keep]
    return PcaModel(pole=pole, loadings=G, variances=lam, scores=X @ G,
                    coords=V, total_variance=float(np.trace(Sv)))


def pc_path(model: PcaModel, j: int, c: float) -> np.ndarray:
    """Covariance matrix ``c`` standard deviations along component ``j`` (1-based)."""
    if not 1 <= j <= model.p:
        raise InvalidComponent(f"component {j} out of range 1..{model.p}")
    W = unvec(np.sqrt(model.variances[j - 1]) * model.loadings[:, j - 1], model.k)
    F = model.pole + c * W
    return (F @ F.T + (F @ F.T).T) / 2


def noisy_geodesic(S1, S2, steps: int = 11, copies: int = 3, sigma: float = 0.05,
                   rng=None) -> np.ndarray:
    """Points on the Procrustes geodesic from ``S1`` to ``S2`` with factor noise.

    Each of ``copies`` passes along ``steps`` equally spaced points adds an
    independent ``N(0, sigma^2)`` matrix to the interpolated factor.  Returns
    ``(copies * steps, k, k)`` matrices ordered by copy, then step.
    """
    rng = np.random.default_rng(rng)
    L1 = factor(S1)
    L2 = factor(S2)
    R = procrustes_rotation(L1, L2).rotation
    A, B = L1, L2 @ R
    k = A.shape[0]
    out = []
    for _ in range(copies):
        for w in np.linspace(0.0, 1.0, steps):
            F = (1 - w) * A + w * B + sigma * rng.standard_normal((k, k))
            out.append(F @ F.T)
    return (np.stack(out) + np.swapaxes(np.stack(out), -1, -2)) / 2
