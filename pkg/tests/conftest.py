import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spdstats import matcore


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def spd(rng, k=3, spread=1.0):
    return matcore.random_spd(k, rng, spread)


def spd_stack(rng, n, k=3, spread=1.0):
    return np.stack([spd(rng, k, spread) for _ in range(n)])


def rotation(rng, k=3):
    return matcore.random_orthogonal(k, rng)


def brute_force_procrustes(L1, L2, rng, draws=10_000):
    """Smallest ||L1 - L2 R|| over random R in O(k)."""
    k = L1.shape[0]
    Z = rng.standard_normal((draws, k, k))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    return float(np.min(np.linalg.norm(L1 - L2 @ Q, axis=(1, 2))))


def jacobi_eigenvalues(S, sweeps=100):
    """Cyclic Jacobi rotations; an eigen oracle independent of LAPACK."""
    A = np.array(S, dtype=float)
    k = A.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off < 1e-15 * max(1.0, np.abs(A).max()):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                if A[p, q] == 0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                J = np.eye(k)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


@st.composite
def spd_matrices(draw, k=3, low=-2.0, high=2.0):
    """Strictly PD matrices with log-eigenvalues in [low, high]."""
    seed = draw(st.integers(0, 2**32 - 1))
    logs = draw(arrays(float, k, elements=st.floats(low, high)))
    V = matcore.random_orthogonal(k, np.random.default_rng(seed))
    return matcore._compose(V, np.exp(logs))


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
