"""Scalar anisotropy indices of diffusion-type tensors.

All four indices are functions of the eigenvalues only:

* ``fa``: spread of the eigenvalues relative to their root mean square,
* ``pa``: the same on the square-root scale,
* ``ga``: standard deviation (times sqrt(k)) of the log-eigenvalues,
* ``faalpha``: ``fa`` on the ``lambda**alpha`` scale.

``fa``, ``pa`` and ``faalpha`` lie in ``[0, 1]``; ``ga`` is unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import InvalidInput, NotPositiveDefinite, SpdError, UndefinedAnisotropy

KINDS = ("fa", "pa", "ga", "faalpha")


@dataclass(frozen=True)
class AnisotropyKind:
    tag: str
    alpha: float | None = None

    def __post_init__(self):
        tag = str(self.tag).lower().replace("(", "").replace(")", "")
        if tag not in KINDS:
            raise InvalidInput(f"unknown anisotropy kind {self.tag!r}")
        object.__setattr__(self, "tag", tag)
        if tag == "faalpha":
            if self.alpha is None or not math.isfinite(self.alpha) or self.alpha == 0:
                raise InvalidInput("faalpha needs a finite nonzero alpha")
            object.__setattr__(self, "alpha", float(self.alpha))
        else:
            object.__setattr__(self, "alpha", None)

    @classmethod
    def of(cls, kind, alpha=None) -> "AnisotropyKind":
        return kind if isinstance(kind, AnisotropyKind) else cls(kind, alpha)

    def __str__(self):
        return f"faalpha({self.alpha:g})" if self.tag == "faalpha" else self.tag


def _spread(x, denom):
    """sqrt(k/(k-1) * sum (x - mean x)^2 / denom), clipped into [0, 1]."""
    k = x.shape[-1]
    dev = x - x.mean(axis=-1, keepdims=True)
    val = np.sqrt(k / (k - 1) * np.sum(dev * dev, axis=-1) / denom)
    # round-off can push a maximally anisotropic tensor a hair above 1
    return np.minimum(val, 1.0)


def from_eigenvalues(lam, kind="fa", alpha=None) -> float:
    """Anisotropy from an eigenvalue vector (any order)."""
    kind = AnisotropyKind.of(kind, alpha)
    lam = np.asarray(lam, dtype=float)
    k = lam.shape[-1]
    if k < 2:
        raise InvalidInput("anisotropy needs k >= 2")
    if not np.all(np.isfinite(lam)):
        raise InvalidInput("non-finite eigenvalues")
    tol = matcore.psd_tol(lam)
    if np.min(lam) < -tol:
        raise InvalidInput(f"negative eigenvalue {np.min(lam):.6g}")
    lam = np.where(lam <= tol, 0.0, lam)
    if not np.any(lam > 0):
        raise UndefinedAnisotropy("anisotropy of the zero matrix")
    tag = kind.tag
    if tag == "fa":
        return float(_spread(lam, np.sum(lam * lam)))
    if tag == "pa":
        return float(_spread(np.sqrt(lam), np.sum(lam)))
    if tag == "ga":
        if np.any(lam <= 0):
            raise NotPositiveDefinite("geodesic anisotropy needs a positive definite tensor")
        g = np.log(lam)
        return float(np.sqrt(np.sum((g - g.mean()) ** 2)))
    a = kind.alpha
    if np.any(lam <= 0) and (a < 0 or a != int(a)):
        raise NotPositiveDefinite("fractional or negative alpha needs a positive definite tensor")
    p = lam**a
    return float(_spread(p, np.sum(p * p)))


def anisotropy(S, kind="fa", alpha=None) -> float:
    """Anisotropy index of a single PSD matrix."""
    S = matcore.check_psd(S, what="tensor")
    if S.ndim != 2:
        raise InvalidInput("anisotropy takes a single matrix")
    return from_eigenvalues(matcore.sym_eigen(S).values, kind, alpha)


def fa(S):
    return anisotropy(S, "fa")


def pa(S):
    return anisotropy(S, "pa")


def ga(S):
    return anisotropy(S, "ga")


def anisotropy_map(field, kind="fa", alpha=None) -> np.ma.MaskedArray:
    """Per-voxel anisotropy of a :class:`~spdstats.geodesics.TensorField`.

    Masked voxels stay masked.  Voxels where the index is undefined (zero
    tensor, rank deficiency for ``ga``, invalid tensor) are masked too.
    """
    kind = AnisotropyKind.of(kind, alpha)
    out = np.zeros(field.dims)
    mask = field.mask.copy()
    for idx in np.ndindex(*field.dims):
        if mask[idx]:
            continue
        try:
            out[idx] = anisotropy(field.tensors[idx], kind)
        except SpdError:
            mask[idx] = True
    return np.ma.MaskedArray(out, mask=mask)
