"""Deterministic synthetic tensor fields for demos and tests."""

from __future__ import annotations

import numpy as np

from . import matcore
from .errors import InvalidInput
from .geodesics import Geodesic, TensorField

PATTERNS = ("geodesic", "two-region", "crossing")


def _rot_z(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def anisotropic_pair(ratio: float = 10.0):
    """Two equal-shape prolate tensors whose main axes differ by 90 degrees."""
    S1 = np.diag([ratio, 1.0, 1.0]) / ratio
    V = _rot_z(np.pi / 2)
    return S1, V @ S1 @ V.T


def geodesic_field(S1, S2, steps: int = 11, metric="procrustes") -> TensorField:
    """A ``steps x 1 x 1`` field sampling the geodesic from ``S1`` to ``S2``."""
    if steps < 2:
        raise InvalidInput("a geodesic pattern needs at least 2 steps")
    g = Geodesic(S1, S2, metric)
    T = g.path(np.linspace(0.0, 1.0, steps))
    return TensorField(T[:, None, None])


def two_region(dims=(8, 8, 1), low=(1.0, 1.0, 1.0), high=(4.0, 1.0, 1.0)) -> TensorField:
    """Left half diag(``low``), right half diag(``high``), split along x."""
    nx, ny, nz = dims
    T = np.zeros((nx, ny, nz, 3, 3))
    T[: nx // 2] = np.diag(low)
    T[nx // 2:] = np.diag(high)
    return TensorField(T)


def crossing(dims=(16, 16, 1), width: int = 4, ratio: float = 5.0,
             noise: float = 0.0, seed: int = 0) -> TensorField:
    """Two perpendicular fibre bands on an isotropic background.

    A band along x through the middle rows and a band along y through the
    middle columns; where they cross the tensor is their average.  With
    ``noise > 0`` each voxel's factor gets i.i.d. ``N(0, noise^2)`` entries.
    """
    nx, ny, nz = dims
    rng = np.random.default_rng(seed)
    iso = np.eye(3)
    along_x = np.diag([ratio, 1.0, 1.0])
    along_y = np.diag([1.0, ratio, 1.0])
    cx = slice(max(nx // 2 - width // 2, 0), nx // 2 - width // 2 + width)
    cy = slice(max(ny // 2 - width // 2, 0), ny // 2 - width // 2 + width)
    in_y = np.zeros(nx, dtype=bool)
    in_y[cx] = True
    in_x = np.zeros(ny, dtype=bool)
    in_x[cy] = True
    T = np.zeros((nx, ny, nz, 3, 3))
    for i in range(nx):
        for j in range(ny):
            if in_y[i] and in_x[j]:
                S = (along_x + along_y) / 2
            elif in_x[j]:
                S = along_x
            elif in_y[i]:
                S = along_y
            else:
                S = iso
            T[i, j, :] = S
    if noise > 0:
        F = np.linalg.cholesky(T) + noise * rng.standard_normal(T.shape)
        T = F @ np.swapaxes(F, -1, -2)
        T = (T + np.swapaxes(T, -1, -2)) / 2
    return TensorField(T).validate()


def random_field(dims=(4, 4, 1), k: int = 3, seed: int = 0, spread: float = 1.0) -> TensorField:
    rng = np.random.default_rng(seed)
    T = np.stack([matcore.random_spd(k, rng, spread) for _ in range(int(np.prod(dims)))])
    return TensorField(T.reshape(tuple(dims) + (k, k)))
