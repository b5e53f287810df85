"""Weighted Fréchet means of covariance matrices.

``frechet_mean`` minimises ``sum_i w_i d(S_i, M)^2`` for each metric in
:mod:`spdstats.metrics`.  Euclidean, log-Euclidean, Cholesky, root-Euclidean
and power means are weighted averages on a transformed scale; the two
Procrustes means use the Generalized Procrustes Algorithm and the Riemannian
mean uses the usual fixed-point (Karcher) iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import (
    DegenerateInput,
    EmptySample,
    InvalidInput,
    NonConvergence,
    NotPositiveDefinite,
    NotPositiveSemidefinite,
)
from .metrics import Metric, pairwise_procrustes

MAX_ITER = 1000
TOL = 1e-10


@dataclass
class MeanConfig:
    metric: Metric = field(default_factory=lambda: Metric("euclidean"))
    max_iter: int = MAX_ITER
    tol: float = TOL
    weights: np.ndarray | None = None
    size: str = "data"  # full Procrustes size rule, see gpa()

    def __post_init__(self):
        self.metric = Metric.of(self.metric)
        if self.max_iter < 1 or not self.tol > 0:
            raise InvalidInput("max_iter and tol must be positive")


@dataclass
class MeanResult:
    estimate: np.ndarray
    iterations: int = 1
    objective: float = 0.0
    converged: bool = True
    rotations: np.ndarray | None = None  # GPA only: R_i matching L_i to the mean factor
    scales: np.ndarray | None = None  # full Procrustes only
    factor: np.ndarray | None = None  # GPA only: mean factor
    history: list = field(default_factory=list)


def _stack(samples) -> np.ndarray:
    S = np.asarray(samples, dtype=float)
    if S.ndim == 2:
        S = S[None]
    if S.ndim != 3 or S.shape[0] == 0:
        if S.size == 0:
            raise EmptySample("mean of an empty sample")
        raise InvalidInput(f"expected a stack of matrices, got shape {S.shape}")
    return matcore.as_sym(S)


def _weights(w, n) -> np.ndarray:
    if w is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != (n,):
        raise InvalidInput(f"need {n} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInput("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise InvalidInput(f"weights sum to {w.sum():.15g}, not 1")
    return w


def _check_spectrum(lam, strict):
    tol = matcore.psd_tol(lam)
    low = lam[..., -1]
    if np.any(low < -tol):
        bad = float(np.min(low))
        raise NotPositiveSemidefinite(f"sample has negative eigenvalue {bad:.6g}", eigenvalue=bad)
    if strict and np.any(low <= tol):
        raise NotPositiveDefinite("metric needs strictly positive definite samples")
    return np.where(np.abs(lam) <= tol[..., None], 0.0, lam)


def _wsum(w, X):
    return np.tensordot(w, X, axes=1)


def _sqnorms(X):
    return np.sum(X * X, axis=(-2, -1))


def _cholesky_stack(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return np.stack([matcore.cholesky(s, strict=False) for s in S])


def _factor_stack(S, lam=None, U=None):
    """Cholesky icons, or symmetric roots for rank-deficient samples."""
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        if U is None:
            U, lam = matcore.sym_eigen(S)
            lam = _check_spectrum(lam, False)
        out = []
        for s, u, l in zip(S, U, lam):
            try:
                out.append(np.linalg.cholesky(s))
            except np.linalg.LinAlgError:
                out.append(matcore._compose(u, np.sqrt(l)))
        return np.stack(out)


def frechet_mean(samples, metric="euclidean", weights=None, *, alpha=None,
                 max_iter: int = MAX_ITER, tol: float = TOL, size: str = "data") -> MeanResult:
    """Weighted Fréchet mean of ``samples`` under ``metric``.

    Parameters
    ----------
    samples : array_like, shape (n, k, k)
        Positive semi-definite matrices.
    metric : str or Metric
        Any metric name accepted by :class:`spdstats.metrics.Metric`.
    weights : array_like, shape (n,), optional
        Nonnegative weights summing to one.  Uniform when omitted.

    Returns
    -------
    MeanResult
        ``objective`` is ``sum_i w_i d(S_i, estimate)^2``.

    Raises
    ------
    EmptySample, NotPositiveDefinite, NonConvergence
    """
    m = Metric.of(metric, alpha)
    S = _stack(samples)
    n = S.shape[0]
    w = _weights(weights, n)
    U, lam = matcore.sym_eigen(S)
    lam = _check_spectrum(lam, m.needs_pd)
    name = m.name

    if name == "euclidean":
        est = _wsum(w, S)
        obj = float(w @ _sqnorms(S - est))
        return MeanResult(est, objective=obj)
    if name == "log_euclidean":
        logs = matcore._compose(U, np.log(lam))
        ml = _wsum(w, logs)
        est = matcore.mat_exp(ml)
        return MeanResult(est, objective=float(w @ _sqnorms(logs - ml)))
    if name == "cholesky":
        L = _cholesky_stack(S)
        D = _wsum(w, L)
        return MeanResult(D @ D.T, objective=float(w @ _sqnorms(L - D)))
    if name == "root_euclidean":
        R = matcore._compose(U, np.sqrt(lam))
        D = _wsum(w, R)
        return MeanResult(D @ D.T, objective=float(w @ _sqnorms(R - D)))
    if name == "power":
        a = m.alpha
        P = matcore._compose(U, np.power(lam, a))
        D = _wsum(w, P)
        est = matcore.mat_pow(D, 1.0 / a)
        return MeanResult(est, objective=float(w @ _sqnorms(P - D)) / a**2)
    if name in ("procrustes", "full_procrustes"):
        L = _factor_stack(S, lam, U)
        return gpa(L, scaling=(name == "full_procrustes"), weights=w,
                   max_iter=max_iter, tol=tol, size=size)
    return riemannian_mean(S, weights=w, max_iter=max_iter, tol=tol, _spectrum=(U, lam))


def mean(samples, config: MeanConfig | None = None) -> MeanResult:
    config = config or MeanConfig()
    return frechet_mean(samples, config.metric, config.weights,
                        max_iter=config.max_iter, tol=config.tol, size=config.size)


def weighted_frechet(samples, weights, metric="euclidean", alpha=None) -> np.ndarray:
    return frechet_mean(samples, metric, weights, alpha=alpha).estimate


def _scale_update(Y, w, sq):
    """Scales maximising ``||sum_i w_i b_i Y_i||`` with ``sum_i w_i b_i^2 ||Y_i||^2`` fixed.

    ``sq`` holds ``||Y_i||^2``.  The constraint keeps the weighted sum of squared
    sizes of the data, so the mean factor carries the data's own scale.
    """
    beta = np.ones(len(w))
    pos = w > 0
    if np.any(sq[pos] <= 0):
        raise DegenerateInput("cannot scale a zero factor")
    Yp = Y[pos].reshape(int(pos.sum()), -1)
    nr = np.sqrt(sq[pos])
    sw = np.sqrt(w[pos])
    C = (Yp @ Yp.T) / np.outer(nr, nr)
    M = np.outer(sw, sw) * C
    _, vecs = np.linalg.eigh(M)
    phi = vecs[:, -1]
    phi = phi if phi.sum() >= 0 else -phi
    if np.any(phi <= 0):
        raise DegenerateInput("full Procrustes scales are not all positive")
    total = float(w[pos] @ sq[pos])
    beta[pos] = np.sqrt(total) * phi / (sw * nr)
    return beta


def _mean_norm_update(Y, w, sq, D):
    """Per-sample least-squares scales onto ``D``, then ``||mean|| = sum w_i ||L_i||``."""
    dots = np.sum(Y * D, axis=(-2, -1))
    beta = np.where(sq > 0, dots / np.where(sq > 0, sq, 1.0), 1.0)
    if np.any(beta[w > 0] <= 0):
        raise DegenerateInput("full Procrustes scales are not all positive")
    Dn = _wsum(w, Y * beta[:, None, None])
    target = float(w @ np.sqrt(sq))
    size = float(np.linalg.norm(Dn))
    if size == 0:
        raise DegenerateInput("full Procrustes mean collapsed to zero")
    return beta * (target / size)


SIZE_RULES = ("data", "mean_norm")


def gpa(factors, scaling: bool = False, weights=None, *,
        max_iter: int = MAX_ITER, tol: float = TOL, size: str = "data") -> MeanResult:
    """Generalized Procrustes Algorithm on k x k factors.

    Alternates between rotating every factor onto the current mean factor
    (and rescaling them, when ``scaling`` is set) and replacing the mean with
    the weighted average of the fitted factors.  Starts from the first factor
    and stops once the implied covariance matrix moves less than ``tol``.

    ``history`` records ``sum_i w_i ||b_i L_i R_i - mean||^2`` per iteration;
    it is nonincreasing.  With ``scaling`` the returned ``objective`` is the
    weighted sum of squared full Procrustes distances; without it, of squared
    Procrustes size-and-shape distances.

    With scaling the overall size is fixed by ``size``: ``"data"`` keeps
    ``sum_i w_i ||b_i L_i||^2 = sum_i w_i ||L_i||^2`` and picks the scales from
    the leading eigenvector of the weighted correlation matrix of the rotated
    factors; ``"mean_norm"`` uses least-squares scales onto the current mean
    and then rescales the mean to ``||mean|| = sum_i w_i ||L_i||``.  Only the
    first makes the history monotone.
    """
    if size not in SIZE_RULES:
        raise InvalidInput(f"unknown size rule {size!r}")
    L = np.asarray(factors, dtype=float)
    if L.ndim == 2:
        L = L[None]
    if L.shape[0] == 0:
        raise EmptySample("GPA on an empty sample")
    if not np.all(np.isfinite(L)):
        raise InvalidInput("factors have non-finite entries")
    n = L.shape[0]
    w = _weights(weights, n)
    sq = _sqnorms(L)
    D = L[0].copy()
    C = D @ D.T
    beta = np.ones(n)
    history = []
    change = np.inf
    for it in range(1, max_iter + 1):
        R, _ = pairwise_procrustes(L, D)
        Y = L @ R
        if scaling:
            if size == "data":
                beta = _scale_update(Y, w, sq)
            else:
                beta = _mean_norm_update(Y, w, sq, D)
            Y = Y * beta[:, None, None]
        D = _wsum(w, Y)
        history.append(float(w @ _sqnorms(Y - D)))
        C_new = D @ D.T
        change = float(np.linalg.norm(C_new - C))
        C = C_new
        if change < tol:
            break
    else:
        raise NonConvergence(max_iter, change)

    R, s = pairwise_procrustes(L, D)
    if scaling:
        dn2 = float(np.sum(D * D))
        cos2 = np.sum(s, axis=-1) ** 2 / (sq * dn2)
        obj = float(w @ np.clip(1.0 - cos2, 0.0, None))
    else:
        obj = float(w @ _sqnorms(D - L @ R))
    return MeanResult((C + C.T) / 2, iterations=it, objective=obj, converged=True,
                      rotations=R, scales=beta if scaling else None, factor=D,
                      history=history)


def _whiten_logs(M, S):
    Um, lm = matcore.sym_eigen(M)
    if lm[-1] <= 0:
        raise NotPositiveDefinite("Riemannian mean iterate lost definiteness")
    h = matcore._compose(Um, np.sqrt(lm))
    hi = matcore._compose(Um, 1.0 / np.sqrt(lm))
    Uz, lz = matcore.sym_eigen(hi @ S @ hi)
    if np.any(lz[:, -1] <= 0):
        raise NotPositiveDefinite("whitened sample lost definiteness")
    return h, matcore._compose(Uz, np.log(lz))


def _karcher_step(h, T, t, S, w):
    M = h @ matcore.mat_exp(t * T) @ h
    M = (M + M.T) / 2
    h, logs = _whiten_logs(M, S)
    T = _wsum(w, logs)
    return M, h, logs, float(w @ _sqnorms(logs)), T, float(np.linalg.norm(T))


def riemannian_mean(samples, weights=None, *, max_iter: int = MAX_ITER,
                    tol: float = TOL, _spectrum=None) -> MeanResult:
    """Affine-invariant Riemannian (Karcher) mean by fixed-point iteration.

    ``M <- M^1/2 exp(t sum_i w_i log(M^-1/2 S_i M^-1/2)) M^1/2`` starting from
    the log-Euclidean mean, until the weighted log term has norm below ``tol``.
    The step ``t`` starts at 1 and is halved until the objective decreases
    enough, which stops the plain iteration from oscillating on widely
    spread, badly conditioned samples.  Once the objective can no longer
    resolve progress the step is chosen to shrink the log term instead.
    """
    S = _stack(samples)
    n = S.shape[0]
    w = _weights(weights, n)
    if _spectrum is None:
        U, lam = matcore.sym_eigen(S)
        lam = _check_spectrum(lam, True)
    else:
        U, lam = _spectrum
    M = matcore.mat_exp(_wsum(w, matcore._compose(U, np.log(lam))))
    h, logs = _whiten_logs(M, S)
    f = float(w @ _sqnorms(logs))
    T = _wsum(w, logs)
    g = float(np.linalg.norm(T))
    history = [f]
    for it in range(1, max_iter + 1):
        if g < tol:
            break
        # f decreases at rate 2 g^2 along T; halve t until it drops by a
        # quarter of that
        step, trials = None, []
        for j in range(7):
            t = 0.5**j
            trials.append(_karcher_step(h, T, t, S, w))
            if trials[-1][3] <= f - 0.5 * t * g * g:
                step = trials[-1]
                break
        if step is None:
            # rounding in f hides the progress, as happens on badly conditioned
            # samples near the optimum; take the step that shrinks the log
            # term most instead
            step = min(trials, key=lambda st: st[5])
            if step[5] >= g:
                raise NonConvergence(it, g)
        M, h, logs, f, T, g = step
        history.append(f)
    else:
        raise NonConvergence(max_iter, g)
    return MeanResult(M, iterations=it, objective=history[-1], converged=True,
                      history=history)


def objective(samples, estimate, metric="euclidean", weights=None, alpha=None) -> float:
    """``sum_i w_i d(S_i, estimate)^2`` evaluated with :func:`metrics.distance`."""
    from .metrics import distance

    S = _stack(samples)
    w = _weights(weights, S.shape[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", matcore.JitterWarning)
        d = np.array([distance(s, estimate, metric, alpha) for s in S])
    return float(w @ d**2)
