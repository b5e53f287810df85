"""Monte Carlo comparison of covariance-mean estimators.

Samples ``S_1..S_n`` are drawn around a true covariance ``Omega`` under one
of four error models, every estimator is computed on the sample, and its
error against ``Omega`` is summarised by RMSE under the Euclidean and
Procrustes size-and-shape distances and by the mean Stein loss
``tr(E Omega^-1) - log det(E Omega^-1) - k``.

Replication ``r`` draws from its own generator
``PCG64(SeedSequence(seed, spawn_key=(r,)))``, so results do not depend on
the order or the thread in which replications run.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import matcore
from .errors import InvalidInput, SingularMatrix, SpdError, StudyAborted
from .means import frechet_mean
from .metrics import SYMBOLS, factor

log = logging.getLogger(__name__)

MODELS = ("I", "II", "III", "IV")
_MODEL_ALIASES = {
    "i": "I", "1": "I", "gaussian_sqrt": "I",
    "ii": "II", "2": "II", "gaussian_cholesky": "II",
    "iii": "III", "3": "III", "log_gaussian": "III",
    "iv": "IV", "4": "IV", "student_t3": "IV",
}
MODEL3_VARIANTS = ("log_outer", "symmetric_log", "factor_exp", "literal")

# estimator symbol -> metric name, in table column order
ESTIMATORS = {"E": "euclidean", "C": "cholesky", "S": "procrustes",
              "H": "root_euclidean", "L": "log_euclidean", "R": "riemannian",
              "F": "full_procrustes"}

TABLE_LAMBDAS = {2: (1.0, 0.3, 0.1), 3: (1.0, 0.001, 0.001)}


@dataclass(frozen=True)
class ErrorModel:
    tag: str
    sigma: float = 0.1
    model3: str = "log_outer"

    def __post_init__(self):
        tag = _MODEL_ALIASES.get(str(self.tag).lower())
        if tag is None:
            raise InvalidInput(f"unknown error model {self.tag!r}")
        object.__setattr__(self, "tag", tag)
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidInput("sigma must be positive")
        if self.model3 not in MODEL3_VARIANTS:
            raise InvalidInput(f"unknown model III variant {self.model3!r}")


def replication_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(r,))))


def _outer(F):
    S = F @ np.swapaxes(F, -1, -2)
    return (S + np.swapaxes(S, -1, -2)) / 2


def gen_sample(model: ErrorModel, omega, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` PSD matrices around ``omega`` under ``model``.

    I:   ``(D + X)(D + X)^T`` with ``D = chol(omega)`` and ``X`` i.i.d. ``N(0, s^2)``.
    II:  as I with ``X`` lower triangular.
    III: log-scale noise; ``model.model3`` picks the construction:
         ``log_outer`` gives ``exp(log omega + X X^T)``,
         ``symmetric_log`` gives ``exp(log omega + (X + X^T)/2)``,
         ``factor_exp`` gives ``exp(Y) exp(Y)^T`` and ``literal`` gives
         ``exp(Y Y^T)``, both with ``Y = log D + X``.
    IV:  as I with entries ``(s / sqrt 3) t_3``.
    """
    omega = matcore.check_psd(omega, strict=True, what="omega")
    k = omega.shape[0]
    s = model.sigma
    D = np.linalg.cholesky(omega)
    shape = (n, k, k)
    if model.tag == "I":
        return _outer(D + rng.normal(0.0, s, shape))
    if model.tag == "II":
        return _outer(D + np.tril(rng.normal(0.0, s, shape)))
    if model.tag == "IV":
        z = rng.standard_normal(shape)
        chi = rng.chisquare(3, shape)
        return _outer(D + s / math.sqrt(3) * z / np.sqrt(chi / 3))
    X = rng.normal(0.0, s, shape)
    if model.model3 == "log_outer":
        return matcore.mat_exp(matcore.mat_log(omega) + _outer(X))
    if model.model3 == "symmetric_log":
        return matcore.mat_exp(matcore.mat_log(omega) + (X + np.swapaxes(X, -1, -2)) / 2)
    Y = matcore.triangular_log(D) + X
    if model.model3 == "factor_exp":
        return _outer(np.stack([matcore.general_exp(y) for y in Y]))
    return matcore.mat_exp(_outer(Y))


def stein_loss(S1, S2) -> float:
    """``tr(S1 S2^-1) - log det(S1 S2^-1) - k``; zero iff ``S1 == S2``."""
    S1 = matcore.as_sym(S1)
    S2 = matcore.as_sym(S2)
    if S1.shape != S2.shape or S1.ndim != 2:
        raise InvalidInput("Stein loss needs two matrices of the same size")
    try:
        C = np.linalg.cholesky(S2)
    except np.linalg.LinAlgError:
        raise SingularMatrix("Stein loss needs a positive definite reference") from None
    # C^-1 S1 C^-T has the same trace and determinant as S1 S2^-1
    Ci = np.linalg.solve(C, np.eye(S2.shape[0]))
    M = Ci @ S1 @ Ci.T
    lam = np.linalg.eigvalsh((M + M.T) / 2)
    if lam[0] <= 0:
        raise SingularMatrix("Stein loss needs a positive definite estimate")
    return float(max(np.sum(lam) - np.sum(np.log(lam)) - lam.size, 0.0))


@dataclass
class StudyConfig:
    omega_eigenvalues: tuple = TABLE_LAMBDAS[2]
    model: ErrorModel = field(default_factory=lambda: ErrorModel("I"))
    n: int = 10
    reps: int = 1000
    seed: int = 20240101
    estimators: tuple = tuple(ESTIMATORS)
    omega_rotation: int | None = None  # seed for a fixed Haar rotation of Omega
    threads: int = 1
    max_failure_rate: float = 0.01

    def __post_init__(self):
        lam = tuple(float(x) for x in self.omega_eigenvalues)
        if not lam or min(lam) <= 0:
            raise InvalidInput("omega eigenvalues must be positive")
        self.omega_eigenvalues = lam
        if not isinstance(self.model, ErrorModel):
            self.model = ErrorModel(self.model)
        if self.n < 1 or self.reps < 1:
            raise InvalidInput("n and reps must be at least 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise InvalidInput("seed must be a 64-bit unsigned integer")
        est = tuple(e.upper() for e in self.estimators)
        bad = [e for e in est if e not in ESTIMATORS]
        if bad or not est:
            raise InvalidInput(f"unknown estimators {bad}; choose from {''.join(ESTIMATORS)}")
        self.estimators = est
        if not 0.0 <= self.max_failure_rate <= 1.0:
            raise InvalidInput("max_failure_rate must lie in [0, 1]")

    def omega(self) -> np.ndarray:
        lam = np.asarray(self.omega_eigenvalues)
        if self.omega_rotation is None:
            return np.diag(lam)
        V = matcore.random_orthogonal(lam.size, np.random.default_rng(self.omega_rotation))
        return matcore._compose(V, lam)


@dataclass
class EstimatorStats:
    estimator: str
    rmse_dE: float
    rmse_dS: float
    stein: float
    failures: int
    se_dE: float
    se_dS: float
    se_stein: float


@dataclass
class StudyResult:
    config: StudyConfig
    stats: dict  # symbol -> EstimatorStats
    losses: dict  # symbol -> (reps, 3) array of dE^2, dS^2, Stein; NaN on failure

    def rows(self):
        for sym in self.config.estimators:
            st = self.stats[sym]
            yield {"model": self.config.model.tag, "n": self.config.n, "estimator": sym,
                   "rmse_dE": st.rmse_dE, "rmse_dS": st.rmse_dS, "stein": st.stein,
                   "failures": st.failures}


class _Target:
    """Precomputed pieces of Omega for fast loss evaluation."""

    def __init__(self, omega):
        self.omega = omega
        self.L = np.linalg.cholesky(omega)
        self.L2 = float(np.sum(self.L * self.L))
        self.Li = np.linalg.solve(self.L, np.eye(omega.shape[0]))

    def losses(self, E):
        dE2 = float(np.sum((E - self.omega) ** 2))
        F = factor(E)
        s = np.linalg.svd(self.L.T @ F, compute_uv=False)
        dS2 = max(self.L2 + float(np.sum(F * F)) - 2.0 * float(np.sum(s)), 0.0)
        M = self.Li @ E @ self.Li.T
        lam = np.linalg.eigvalsh((M + M.T) / 2)
        if lam[0] <= 0:
            raise SingularMatrix("estimate is singular")
        stein = max(float(np.sum(lam) - np.sum(np.log(lam))) - lam.size, 0.0)
        return dE2, dS2, stein


def _replicate(config: StudyConfig, target: _Target, r: int) -> np.ndarray:
    rng = replication_rng(config.seed, r)
    S = gen_sample(config.model, target.omega, config.n, rng)
    out = np.full((len(config.estimators), 3), np.nan)
    for j, sym in enumerate(config.estimators):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", matcore.JitterWarning)
                est = frechet_mean(S, ESTIMATORS[sym]).estimate
                out[j] = target.losses(est)
        except (SpdError, np.linalg.LinAlgError) as exc:
            log.debug("replication %d estimator %s failed: %s", r, sym, exc)
    return out


def run_study(config: StudyConfig) -> StudyResult:
    """Run ``config.reps`` replications and summarise each estimator's error."""
    target = _Target(config.omega())
    reps = range(config.reps)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as ex:
            per_rep = list(ex.map(lambda r: _replicate(config, target, r), reps))
    else:
        per_rep = [_replicate(config, target, r) for r in reps]
    # (reps, estimators, 3), reduced in replication order
    A = np.stack(per_rep)
    stats, losses = {}, {}
    for j, sym in enumerate(config.estimators):
        x = A[:, j, :]
        ok = ~np.isnan(x[:, 0])
        fails = int(config.reps - ok.sum())
        if fails > config.max_failure_rate * config.reps:
            raise StudyAborted(
                f"estimator {sym} failed in {fails} of {config.reps} replications")
        if fails:
            warnings.warn(f"estimator {sym}: {fails} failed replications excluded",
                          RuntimeWarning, stacklevel=2)
        y = x[ok]
        m = y.shape[0]
        ms = np.sum(y, axis=0) / m
        sd = np.std(y, axis=0, ddof=1) if m > 1 else np.zeros(3)
        rmse = np.sqrt(ms[:2])
        with np.errstate(divide="ignore", invalid="ignore"):
            # delta method for the standard error of sqrt(mean)
            se_rmse = np.where(rmse > 0, sd[:2] / (2 * rmse * math.sqrt(m)), 0.0)
        stats[sym] = EstimatorStats(sym, float(rmse[0]), float(rmse[1]), float(ms[2]), fails,
                                    float(se_rmse[0]), float(se_rmse[1]),
                                    float(sd[2] / math.sqrt(m)))
        losses[sym] = x
    return StudyResult(config, stats, losses)


def table_configs(table: int, reps: int = 1000, seed: int = 20240101, **kw) -> list[StudyConfig]:
    """Configurations for the four models at n = 10 and 30, for table 2 or 3."""
    if table not in TABLE_LAMBDAS:
        raise InvalidInput("table must be 2 or 3")
    model3 = kw.pop("model3", "log_outer")
    sigma = kw.pop("sigma", 0.1)
    return [StudyConfig(omega_eigenvalues=TABLE_LAMBDAS[table],
                        model=ErrorModel(tag, sigma, model3), n=n, reps=reps, seed=seed, **kw)
            for tag in MODELS for n in (10, 30)]


CSV_FIELDS = ("model", "n", "estimator", "rmse_dE", "rmse_dS", "stein", "failures")


def to_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for res in results:
        for row in res.rows():
            w.writerow([row["model"], row["n"], row["estimator"],
                        f"{row['rmse_dE']:.12g}", f"{row['rmse_dS']:.12g}",
                        f"{row['stein']:.12g}", row["failures"]])
    return buf.getvalue()


def with_threads(config: StudyConfig, threads: int) -> StudyConfig:
    return replace(config, threads=threads)
