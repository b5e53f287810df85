"""Diffusion signal model, least-squares tensor fit and tensor-field files.

Signals follow ``Z_j = Z_0 exp(-b g_j^T D g_j)`` for unit gradient directions
``g_j``.  Fields are stored either as CSV with one voxel per row::

    x,y,z,dxx,dxy,dxz,dyy,dyz,dzz

or as JSON with explicit dims, spacing and mask.  The CSV writer prepends
``#`` comment lines carrying dims and spacing so that trailing masked voxels
and non-unit spacing survive a round trip; readers treat them as optional.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import matcore
from .errors import DegenerateGradientScheme, InvalidInput, InvalidSignal, ParseError
from .geodesics import TensorField

HEADER = ("x", "y", "z", "dxx", "dxy", "dxz", "dyy", "dyz", "dzz")
# (row, col) of each stored entry
_ENTRIES = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


class ClampWarning(UserWarning):
    """A fitted tensor had negative eigenvalues that were set to zero."""


@dataclass(frozen=True)
class GradientScheme:
    directions: np.ndarray  # (m, 3) unit vectors
    b_value: float = 1.0

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if g.ndim != 2 or g.shape[1] != 3:
            raise InvalidInput("gradient directions must be an (m, 3) array")
        if np.any(np.abs(np.linalg.norm(g, axis=1) - 1.0) > 1e-12):
            raise InvalidInput("gradient directions must be unit vectors")
        if not (self.b_value > 0 and math.isfinite(self.b_value)):
            raise InvalidInput("b-value must be positive")
        object.__setattr__(self, "directions", g)

    @property
    def m(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class SignalSet:
    z0: float
    signals: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.signals, dtype=float).ravel()
        object.__setattr__(self, "signals", z)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def scheme6(b_value: float = 1.0) -> GradientScheme:
    """The classic six directions ``(1, +-1, 0)``, ``(1, 0, +-1)``, ``(0, 1, +-1)``."""
    g = [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]
    return GradientScheme(_unit(g), b_value)


def scheme15(b_value: float = 1.0) -> GradientScheme:
    """Fifteen axial directions through the edge midpoints of an icosahedron."""
    p = (1 + math.sqrt(5)) / 2
    verts = []
    for a, b in itertools.product((-1, 1), repeat=2):
        verts += [(0, a, b * p), (a, b * p, 0), (b * p, 0, a)]
    verts = np.array(verts, dtype=float)
    edge = 2.0
    dirs = []
    for i, j in itertools.combinations(range(len(verts)), 2):
        if abs(np.linalg.norm(verts[i] - verts[j]) - edge) < 1e-9:
            d = _unit(verts[i] + verts[j])
            # one representative per axis: first nonzero coordinate positive
            s = d[np.flatnonzero(np.abs(d) > 1e-12)[0]]
            d = d if s > 0 else -d
            if not any(np.allclose(d, e) for e in dirs):
                dirs.append(d)
    return GradientScheme(np.array(dirs), b_value)


def forward_signal(D, scheme: GradientScheme, z0: float = 1.0) -> SignalSet:
    """Noise-free signals ``z0 * exp(-b g^T D g)``."""
    D = matcore.check_psd(D, what="diffusion tensor")
    if D.shape != (3, 3):
        raise InvalidInput("diffusion tensor must be 3 x 3")
    g = scheme.directions
    q = np.einsum("mi,ij,mj->m", g, D, g)
    return SignalSet(float(z0), z0 * np.exp(-scheme.b_value * q))


def design_matrix(scheme: GradientScheme) -> np.ndarray:
    g = scheme.directions
    cols = [g[:, i] * g[:, j] * (1.0 if i == j else 2.0) for i, j in _ENTRIES]
    return np.stack(cols, axis=1)


def fit_tensor_ls(signals: SignalSet, scheme: GradientScheme, return_flag: bool = False):
    """Least-squares tensor from log signals.

    Solves ``-log(Z_j / Z_0) / b = g_j^T D g_j`` for the six free entries.
    Negative eigenvalues of the fit are set to zero and a
    :class:`ClampWarning` is issued; with ``return_flag`` the result is
    ``(D, clamped)``.
    """
    z = signals.signals
    if z.size != scheme.m:
        raise InvalidInput(f"{z.size} signals for {scheme.m} directions")
    if not (signals.z0 > 0) or np.any(~(z > 0)) or not np.all(np.isfinite(z)):
        raise InvalidSignal("signals must be positive and finite")
    if scheme.m < 6:
        raise DegenerateGradientScheme(f"need at least 6 directions, got {scheme.m}")
    A = design_matrix(scheme)
    if np.linalg.matrix_rank(A) < 6:
        raise DegenerateGradientScheme("gradient directions do not determine a tensor")
    y = -np.log(z / signals.z0) / scheme.b_value
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    D = np.zeros((3, 3))
    for c, (i, j) in zip(coef, _ENTRIES):
        D[i, j] = D[j, i] = c
    U, lam = matcore.sym_eigen(D)
    clamped = bool(lam[-1] < 0)
    if clamped:
        D = matcore._compose(U, np.clip(lam, 0.0, None))
        warnings.warn("negative eigenvalues in fitted tensor set to zero", ClampWarning,
                      stacklevel=2)
    return (D, clamped) if return_flag else D


# ---------------------------------------------------------------- field files


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_field(tf: TensorField, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(field_to_json(tf), encoding="utf-8")
    else:
        path.write_text(field_to_csv(tf), encoding="utf-8")


def read_field(path) -> TensorField:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return field_from_json(text)
    return field_from_csv(text)


def field_to_csv(tf: TensorField) -> str:
    if tf.k != 3:
        raise InvalidInput("CSV field files hold 3 x 3 tensors; use JSON for other sizes")
    lines = ["# dims " + " ".join(str(n) for n in tf.dims),
             "# spacing " + " ".join(_fmt(s) for s in tf.spacing),
             ",".join(HEADER)]
    for idx in np.ndindex(*tf.dims):
        if tf.mask[idx]:
            continue
        T = tf.tensors[idx]
        vals = [str(i) for i in idx] + [_fmt(T[i, j]) for i, j in _ENTRIES]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def field_from_csv(text: str) -> TensorField:
    dims = spacing = None
    header_seen = False
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            try:
                if parts and parts[0] == "dims":
                    dims = tuple(int(p) for p in parts[1:])
                elif parts and parts[0] == "spacing":
                    spacing = tuple(float(p) for p in parts[1:])
            except ValueError:
                raise ParseError(f"bad {parts[0]} directive", line=lineno) from None
            continue
        if not header_seen:
            if tuple(c.strip() for c in line.split(",")) != HEADER:
                raise ParseError("expected header " + ",".join(HEADER), line=lineno)
            header_seen = True
            continue
        cells = line.split(",")
        if len(cells) != len(HEADER):
            raise ParseError(f"expected {len(HEADER)} fields, got {len(cells)}", line=lineno)
        try:
            idx = tuple(int(c) for c in cells[:3])
            vals = [float(c) for c in cells[3:]]
        except ValueError:
            raise ParseError("non-numeric field", line=lineno) from None
        if min(idx) < 0 or not all(math.isfinite(v) for v in vals):
            raise ParseError("negative index or non-finite value", line=lineno)
        rows.append((lineno, idx, vals))
    if not header_seen:
        raise ParseError("missing header", line=1)
    if dims is None:
        dims = tuple(max((r[1][a] for r in rows), default=-1) + 1 for a in range(3))
    if len(dims) != 3:
        raise ParseError("dims directive needs three values", line=1)
    T = np.zeros(dims + (3, 3))
    mask = np.ones(dims, dtype=bool)
    for lineno, idx, vals in rows:
        if any(i >= n for i, n in zip(idx, dims)):
            raise ParseError(f"voxel {idx} outside grid {dims}", line=lineno)
        if not mask[idx]:
            raise ParseError(f"duplicate voxel {idx}", line=lineno)
        for v, (i, j) in zip(vals, _ENTRIES):
            T[idx + (i, j)] = T[idx + (j, i)] = v
        mask[idx] = False
    return TensorField(T, spacing or (1.0, 1.0, 1.0), mask)


def field_to_json(tf: TensorField) -> str:
    voxels = [{"index": list(idx), "tensor": tf.tensors[idx].tolist()}
              for idx in np.ndindex(*tf.dims) if not tf.mask[idx]]
    doc = {"dims": list(tf.dims), "spacing": list(tf.spacing), "k": tf.k, "voxels": voxels}
    # json writes floats with repr, which round-trips exactly
    return json.dumps(doc, indent=1) + "\n"


def field_from_json(text: str) -> TensorField:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    try:
        dims = tuple(int(n) for n in doc["dims"])
        k = int(doc.get("k", 3))
        spacing = tuple(float(s) for s in doc.get("spacing", (1.0, 1.0, 1.0)))
        T = np.zeros(dims + (k, k))
        mask = np.ones(dims, dtype=bool)
        for vox in doc["voxels"]:
            idx = tuple(int(i) for i in vox["index"])
            T[idx] = np.asarray(vox["tensor"], dtype=float).reshape(k, k)
            mask[idx] = False
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed field document: {exc}", line=0) from None
    return TensorField(T, spacing, mask)


def read_tensor(path) -> np.ndarray:
    """A single matrix from a file: a one-voxel field, or whitespace/comma rows."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    first = next((ln.strip() for ln in text.splitlines()
                  if ln.strip() and not ln.strip().startswith("#")), "")
    if path.suffix.lower() == ".json" or first.startswith("{") or first.startswith("x,"):
        tf = read_field(path)
        ok = np.flatnonzero(~tf.mask.ravel())
        if ok.size != 1:
            raise ParseError(f"expected a single tensor, found {ok.size}", line=0)
        return tf.tensors.reshape(-1, tf.k, tf.k)[ok[0]]
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(c) for c in line.replace(",", " ").split()])
        except ValueError:
            raise ParseError("non-numeric matrix entry", line=lineno) from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ParseError("matrix file must hold a square array", line=len(rows))
    return np.array(rows)


def write_tensor(S, path=None) -> str:
    text = "\n".join(",".join("%.12g" % v for v in row) for row in np.asarray(S)) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
