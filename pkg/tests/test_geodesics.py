import numpy as np
import pytest

from spdstats import matcore
from spdstats.errors import InvalidInput, NotPositiveSemidefinite
from spdstats.geodesics import Geodesic, TensorField, field_interpolate, geodesic_point
from spdstats.means import frechet_mean
from spdstats.metrics import NAMES, Metric, distance, factor, procrustes_rotation
from spdstats.synthetic import anisotropic_pair

from conftest import spd

GEODESIC = [Metric(n, 0.5 if n == "power" else None) for n in NAMES if n != "full_procrustes"]


@pytest.mark.parametrize("m", GEODESIC, ids=str)
def test_endpoints(m, rng):
    A, B = spd(rng), spd(rng)
    g = Geodesic(A, B, m)
    assert np.allclose(g(0.0), A, atol=matcore.TOL_RECON)
    assert np.allclose(g(1.0), B, atol=matcore.TOL_RECON)


@pytest.mark.parametrize("m", GEODESIC, ids=str)
def test_midpoint_and_additivity(m, rng):
    A, B = spd(rng), spd(rng)
    g = Geodesic(A, B, m)
    d = distance(A, B, m)
    mid = g(0.5)
    assert distance(A, mid, m) == pytest.approx(d / 2, abs=1e-8)
    assert distance(mid, B, m) == pytest.approx(d / 2, abs=1e-8)
    for a, b in [(0.1, 0.7), (0.25, 0.3), (0.0, 0.9)]:
        assert distance(g(a), g(b), m) == pytest.approx((b - a) * d, abs=1e-8)


def test_worked_midpoints():
    A, B = np.diag([2.0, 0.5]), np.diag([0.5, 2.0])
    assert np.allclose(geodesic_point(A, B, 0.5, "euclidean"), np.diag([1.25, 1.25]))
    assert np.allclose(geodesic_point(A, B, 0.5, "riemannian"), np.eye(2))


def test_euclidean_extrapolation_leaves_cone():
    with pytest.raises(NotPositiveSemidefinite) as exc:
        geodesic_point(np.eye(2), np.diag([4.0, 3.0]), -1.0, "euclidean")
    # 2 I - diag(4, 3) = diag(-2, -1); the most negative eigenvalue is reported
    assert exc.value.eigenvalue == pytest.approx(-2.0)


def test_mild_extrapolation_ok(rng):
    A, B = spd(rng), spd(rng)
    for m in ["log_euclidean", "riemannian", "procrustes", "cholesky"]:
        assert matcore.is_psd(geodesic_point(A, B, 1.2, m))


def test_full_procrustes_has_no_geodesic(rng):
    with pytest.raises(InvalidInput):
        Geodesic(spd(rng), spd(rng), "full_procrustes")


def test_procrustes_path_icon_independent(rng):
    A, B = spd(rng), spd(rng)
    L1, L2 = factor(A, "sqrt"), factor(B, "sqrt")
    R = procrustes_rotation(L1, L2).rotation
    for w in (0.2, 0.5, 0.9):
        F = (1 - w) * L1 + w * L2 @ R
        assert np.allclose(F @ F.T, geodesic_point(A, B, w, "procrustes"), atol=1e-8)


def test_procrustes_path_horizontal(rng):
    A, B = spd(rng), spd(rng)
    L1, L2 = factor(A), factor(B)
    R = procrustes_rotation(L1, L2).rotation
    X = L1.T @ L2 @ R
    assert np.allclose(X, X.T, atol=1e-10)
    assert np.all(np.linalg.eigvalsh((X + X.T) / 2) >= -1e-12)


def test_swelling_and_log_linear_determinant():
    A, B = anisotropic_pair()
    ws = np.linspace(0, 1, 11)
    det = lambda m: np.array([np.linalg.det(geodesic_point(A, B, w, m)) for w in ws])
    dE = det("euclidean")
    assert dE[1:-1].max() > max(dE[0], dE[-1])
    for m in ("log_euclidean", "riemannian"):
        ld = np.log(det(m))
        assert np.allclose(ld, (1 - ws) * ld[0] + ws * ld[-1], atol=1e-8)


def _line_field(A, B):
    return TensorField(np.stack([A, B])[:, None, None])


def test_field_factor_one_identity(rng):
    tf = TensorField(np.stack([spd(rng) for _ in range(6)]).reshape(3, 2, 1, 3, 3))
    assert field_interpolate(tf, 1) == tf


def test_field_constant(rng):
    S = spd(rng)
    tf = TensorField(np.broadcast_to(S, (2, 3, 1, 3, 3)).copy())
    out = field_interpolate(tf, 2, "log_euclidean")
    assert out.dims == (3, 5, 1)
    assert np.allclose(out.tensors, S, atol=1e-12)


@pytest.mark.parametrize("m", GEODESIC, ids=str)
def test_field_line_matches_geodesic(m, rng):
    A, B = spd(rng), spd(rng)
    out = field_interpolate(_line_field(A, B), 3, m)
    assert out.dims == (4, 1, 1)
    assert np.array_equal(out.tensors[0, 0, 0], A)
    assert np.array_equal(out.tensors[3, 0, 0], B)
    for i, w in [(1, 1 / 3), (2, 2 / 3)]:
        assert np.allclose(out.tensors[i, 0, 0], geodesic_point(A, B, w, m), atol=1e-8)


def test_field_bilinear_2d(rng):
    T = np.stack([spd(rng) for _ in range(4)]).reshape(2, 2, 1, 3, 3)
    out = field_interpolate(TensorField(T), 4, "euclidean")
    assert out.dims == (5, 5, 1)
    # (1, 2) of 4: fractional offsets (1/4, 1/2)
    fx, fy = 0.25, 0.5
    want = ((1 - fx) * (1 - fy) * T[0, 0, 0] + (1 - fx) * fy * T[0, 1, 0]
            + fx * (1 - fy) * T[1, 0, 0] + fx * fy * T[1, 1, 0])
    assert np.allclose(out.tensors[1, 2, 0], want)
    for i, j in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert np.array_equal(out.tensors[4 * i, 4 * j, 0], T[i, j, 0])
    assert out.spacing == (0.25, 0.25, 1.0)


def test_field_inverse_distance_center(rng):
    T = np.stack([spd(rng) for _ in range(4)]).reshape(2, 2, 1, 3, 3)
    out = field_interpolate(TensorField(T), 2, "riemannian", weighting="inverse_distance")
    want = frechet_mean(T.reshape(4, 3, 3), "riemannian").estimate
    assert np.allclose(out.tensors[1, 1, 0], want, atol=1e-10)


def test_field_masked_neighbours(rng):
    T = np.stack([spd(rng) for _ in range(3)])[:, None, None]
    mask = np.array([False, True, False])
    out = field_interpolate(TensorField(T, mask=mask), 2, "procrustes")
    assert out.dims == (5, 1, 1)
    assert out.mask[:, 0, 0].tolist() == [False, False, True, False, False]
    assert np.array_equal(out.tensors[1, 0, 0], T[0, 0, 0])
    assert np.array_equal(out.tensors[3, 0, 0], T[2, 0, 0])


def test_field_threads_deterministic(rng):
    T = np.stack([spd(rng) for _ in range(9)]).reshape(3, 3, 1, 3, 3)
    a = field_interpolate(TensorField(T), 3, "procrustes", threads=1)
    b = field_interpolate(TensorField(T), 3, "procrustes", threads=4)
    assert np.array_equal(a.tensors, b.tensors)


def test_field_3d_shape(rng):
    T = np.stack([spd(rng) for _ in range(8)]).reshape(2, 2, 2, 3, 3)
    out = field_interpolate(TensorField(T), 2, "cholesky")
    assert out.dims == (3, 3, 3)
    corners = np.stack([out.tensors[2 * i, 2 * j, 2 * k] for i in range(2)
                        for j in range(2) for k in range(2)])
    want = np.linalg.cholesky(corners).mean(0)
    assert np.allclose(out.tensors[1, 1, 1], want @ want.T)


def test_field_errors(rng):
    T = np.stack([spd(rng) for _ in range(2)])[:, None, None]
    with pytest.raises(InvalidInput):
        field_interpolate(TensorField(T), 0)
    with pytest.raises(InvalidInput):
        field_interpolate(TensorField(T, mask=[True, True]), 2)
    with pytest.raises(InvalidInput):
        field_interpolate(TensorField(T), 2, weighting="kriging")
