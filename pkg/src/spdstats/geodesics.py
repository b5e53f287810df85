"""Geodesic interpolation between covariance matrices and over tensor fields."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import InvalidInput, NotPositiveSemidefinite
from .means import frechet_mean
from .metrics import Metric, factor, procrustes_rotation


class Geodesic:
    """Path ``w -> S(w)`` with ``S(0) = S1`` and ``S(1) = S2``.

    Each metric's path is a straight line on its own transformed scale:
    matrices, logs, Cholesky factors, square roots, powers, or
    Procrustes-registered factors ``(L1, L2 R)``.  The Riemannian path is
    ``S1^1/2 (S1^-1/2 S2 S1^-1/2)^w S1^1/2``.  Values of ``w`` outside
    ``[0, 1]`` extrapolate.
    """

    def __init__(self, S1, S2, metric="procrustes", alpha=None):
        self.metric = m = Metric.of(metric, alpha)
        if m.name == "full_procrustes":
            raise InvalidInput("full Procrustes distance has no geodesic evaluator")
        self.S1 = matcore.check_psd(S1, strict=m.needs_pd, what="first endpoint")
        self.S2 = matcore.check_psd(S2, strict=m.needs_pd, what="second endpoint")
        if self.S1.shape != self.S2.shape or self.S1.ndim != 2:
            raise InvalidInput("endpoints must be matrices of the same size")
        name = m.name
        if name == "euclidean":
            self.ends = (self.S1, self.S2)
        elif name == "log_euclidean":
            self.ends = (matcore.mat_log(self.S1), matcore.mat_log(self.S2))
        elif name == "cholesky":
            self.ends = (matcore.cholesky(self.S1, strict=False),
                         matcore.cholesky(self.S2, strict=False))
        elif name == "root_euclidean":
            self.ends = (matcore.mat_sqrt(self.S1), matcore.mat_sqrt(self.S2))
        elif name == "power":
            self.ends = (matcore.mat_pow(self.S1, m.alpha), matcore.mat_pow(self.S2, m.alpha))
        elif name == "procrustes":
            L1, L2 = factor(self.S1), factor(self.S2)
            self.rotation = procrustes_rotation(L1, L2).rotation
            self.ends = (L1, L2 @ self.rotation)
        else:  # riemannian
            U, lam = matcore.sym_eigen(self.S1)
            self._half = matcore._compose(U, np.sqrt(lam))
            ihalf = matcore._compose(U, 1.0 / np.sqrt(lam))
            self._log_rel = matcore.mat_log(ihalf @ self.S2 @ ihalf)

    def _psd(self, S, w):
        lam = matcore.sym_eigen(S).values
        tol = matcore.psd_tol(lam)
        if lam[-1] < -tol:
            raise NotPositiveSemidefinite(
                f"{self.metric} path leaves the PSD cone at w={w:g} "
                f"(eigenvalue {lam[-1]:.6g})", eigenvalue=float(lam[-1]))
        return S

    def __call__(self, w: float) -> np.ndarray:
        w = float(w)
        if w == 0.0:
            return self.S1.copy()
        if w == 1.0:
            return self.S2.copy()
        name = self.metric.name
        if name == "riemannian":
            return _sym(self._half @ matcore.mat_exp(w * self._log_rel) @ self._half)
        A, B = self.ends
        X = (1.0 - w) * A + w * B
        if name == "euclidean":
            return self._psd(_sym(X), w)
        if name == "log_euclidean":
            return matcore.mat_exp(X)
        if name in ("cholesky", "procrustes"):
            return _sym(X @ X.T)
        if name == "root_euclidean":
            # the line can leave the cone of square roots; report it as a PSD failure
            self._psd(_sym(X), w)
            return _sym(X @ X)
        # power: X must be PSD for a real 1/alpha power
        self._psd(_sym(X), w)
        return matcore.mat_pow(X, 1.0 / self.metric.alpha)

    def path(self, ws) -> np.ndarray:
        return np.stack([self(w) for w in ws])


def _sym(X):
    return (X + X.T) / 2


def geodesic_point(S1, S2, w: float, metric="procrustes", alpha=None) -> np.ndarray:
    return Geodesic(S1, S2, metric, alpha)(w)


@dataclass
class TensorField:
    """A 3-D lattice of k x k tensors.

    ``tensors`` has shape ``(nx, ny, nz, k, k)``; ``mask`` is True where a
    voxel is missing.  Two-dimensional fields use ``nz = 1``.
    """

    tensors: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    mask: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        T = np.asarray(self.tensors, dtype=float)
        if T.ndim == 4:
            T = T[:, :, None]
        if T.ndim != 5 or T.shape[-1] != T.shape[-2]:
            raise InvalidInput(f"tensor field needs shape (nx, ny, nz, k, k), got {T.shape}")
        self.tensors = T
        if self.mask is None:
            self.mask = np.zeros(T.shape[:3], dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(T.shape[:3])
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != 3 or min(self.spacing) <= 0:
            raise InvalidInput("spacing needs three positive values")

    @property
    def dims(self) -> tuple:
        return self.tensors.shape[:3]

    @property
    def k(self) -> int:
        return self.tensors.shape[-1]

    def validate(self):
        ok = ~self.mask
        if ok.any():
            matcore.check_psd(self.tensors[ok], what="field tensor")
        return self

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return (self.dims == other.dims and self.spacing == other.spacing
                and np.array_equal(self.mask, other.mask)
                and np.array_equal(self.tensors[~self.mask], other.tensors[~other.mask]))


def _corner_weights(frac, weighting):
    """Weights of the 2^d cell corners for fractional offsets ``frac``."""
    corners = list(itertools.product((0, 1), repeat=len(frac)))
    if weighting == "bilinear":
        w = [np.prod([f if c else 1.0 - f for c, f in zip(cs, frac)]) for cs in corners]
    elif weighting == "inverse_distance":
        d = [np.sqrt(sum((c - f) ** 2 for c, f in zip(cs, frac))) for cs in corners]
        if min(d) == 0.0:
            w = [1.0 if x == 0.0 else 0.0 for x in d]
        else:
            w = [1.0 / x for x in d]
    else:
        raise InvalidInput(f"unknown weighting {weighting!r}")
    return corners, np.asarray(w, dtype=float)


def field_interpolate(tf: TensorField, factor: int, metric="procrustes", *,
                      weighting: str = "bilinear", alpha=None,
                      threads: int = 1) -> TensorField:
    """Refine a tensor field by inserting ``factor - 1`` points between voxels.

    Each new voxel is the weighted Fréchet mean of the unmasked corners of
    its enclosing cell, with weights renormalised to sum to one.  Original
    voxels are copied unchanged.  Axes of length one are left alone.
    """
    factor = int(factor)
    if factor < 1:
        raise InvalidInput("factor must be a positive integer")
    m = Metric.of(metric, alpha)
    if tf.mask.all():
        raise InvalidInput("field has no unmasked voxels")
    if factor == 1:
        return TensorField(tf.tensors.copy(), tf.spacing, tf.mask.copy(), dict(tf.meta))
    dims = tf.dims
    out_dims = tuple((n - 1) * factor + 1 if n > 1 else 1 for n in dims)
    axes = [a for a in range(3) if dims[a] > 1]
    k = tf.k

    def solve(idx):
        base, frac = [], []
        for a in range(3):
            if dims[a] > 1:
                q, r = divmod(idx[a], factor)
                if q == dims[a] - 1:
                    q, r = q - 1, factor
                base.append(q)
                frac.append(r / factor)
            else:
                base.append(0)
        corners, w = _corner_weights([frac[i] for i in range(len(axes))], weighting)
        samples, weights = [], []
        for cs, wt in zip(corners, w):
            pos = list(base)
            for a, c in zip(axes, cs):
                pos[a] += c
            pos = tuple(pos)
            if wt > 0 and not tf.mask[pos]:
                samples.append(tf.tensors[pos])
                weights.append(wt)
        if not samples:
            return None
        if len(samples) == 1:
            return samples[0].copy()
        weights = np.asarray(weights)
        weights /= weights.sum()
        weights[-1] = 1.0 - weights[:-1].sum()
        return frechet_mean(np.stack(samples), m, weights).estimate

    points = list(np.ndindex(*out_dims))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(solve, points))
    else:
        results = [solve(p) for p in points]
    T = np.zeros(out_dims + (k, k))
    mask = np.zeros(out_dims, dtype=bool)
    for p, r in zip(points, results):
        if r is None:
            mask[p] = True
        else:
            T[p] = r
    spacing = tuple(s / factor if dims[a] > 1 else s for a, s in enumerate(tf.spacing))
    meta = dict(tf.meta, weighting=weighting, metric=str(m), factor=factor)
    return TensorField(T, spacing, mask, meta)
