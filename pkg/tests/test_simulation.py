import math

import numpy as np
import pytest

from spdstats import simulation as sim
from spdstats.errors import InvalidInput, NotPositiveDefinite, SingularMatrix, StudyAborted
from spdstats.metrics import distance

OMEGA = np.diag([1.0, 0.3, 0.1])


def test_stein_examples():
    assert sim.stein_loss(OMEGA, OMEGA) == pytest.approx(0, abs=1e-14)
    assert sim.stein_loss(np.diag([2.0, 2.0]), np.eye(2)) == pytest.approx(4 - 2 * math.log(2) - 2)
    A, B = np.diag([4.0, 1.0]), np.eye(2)
    assert sim.stein_loss(A, B) == pytest.approx(3 - math.log(4))
    assert sim.stein_loss(B, A) == pytest.approx(0.25 + math.log(4) - 1)
    assert sim.stein_loss(A, B) != pytest.approx(sim.stein_loss(B, A))


def test_stein_matches_definition(rng):
    from conftest import spd
    A, B = spd(rng), spd(rng)
    M = A @ np.linalg.inv(B)
    want = np.trace(M) - math.log(np.linalg.det(M)) - 3
    assert sim.stein_loss(A, B) == pytest.approx(want, rel=1e-10)


def test_stein_singular():
    with pytest.raises(SingularMatrix):
        sim.stein_loss(np.eye(2), np.diag([1.0, 0.0]))
    with pytest.raises(SingularMatrix):
        sim.stein_loss(np.diag([1.0, 0.0]), np.eye(2))


def test_error_model_validation():
    assert sim.ErrorModel("2").tag == "II"
    with pytest.raises(InvalidInput):
        sim.ErrorModel("V")
    with pytest.raises(InvalidInput):
        sim.ErrorModel("I", sigma=0.0)
    with pytest.raises(InvalidInput):
        sim.ErrorModel("III", model3="other")


@pytest.mark.parametrize("tag", sim.MODELS)
def test_tiny_sigma_recovers_omega(tag, rng):
    S = sim.gen_sample(sim.ErrorModel(tag, 1e-12), OMEGA, 5, rng)
    assert np.allclose(S, OMEGA, atol=1e-10)


def test_model_one_first_moment():
    s, n = 0.1, 100_000
    S = sim.gen_sample(sim.ErrorModel("I", s), OMEGA, n, np.random.default_rng(1))
    want = OMEGA + s**2 * 3 * np.eye(3)
    mean = S.mean(0)
    se = S.std(0) / math.sqrt(n)
    assert np.all(np.abs(mean - want) <= 3 * se + 1e-15)


def test_model_two_is_lower_triangular():
    s = 0.1
    S = sim.gen_sample(sim.ErrorModel("II", s), OMEGA, 20, np.random.default_rng(5))
    X = np.tril(np.random.default_rng(5).normal(0.0, s, (20, 3, 3)))
    F = np.linalg.cholesky(OMEGA) + X
    assert np.allclose(S, F @ np.swapaxes(F, 1, 2), atol=1e-14)
    # every draw has a lower-triangular factor differing from chol(Omega) below the diagonal only
    D = np.linalg.cholesky(OMEGA)
    assert np.all(np.triu(F - D, 1) == 0)


def test_model_four_scale():
    s, n = 0.1, 200_000
    rng = np.random.default_rng(2)
    S = sim.gen_sample(sim.ErrorModel("IV", s), np.eye(3), n, rng)
    # E[S] = I + k sigma^2 I, since (sigma / sqrt 3) t_3 has variance sigma^2
    assert np.allclose(np.median(np.diagonal(S, axis1=1, axis2=2)), 1.0, atol=0.02)
    assert np.trace(S.mean(0)) == pytest.approx(3 * (1 + 3 * s**2), rel=0.02)


def test_model_three_variants(rng):
    for v in sim.MODEL3_VARIANTS:
        S = sim.gen_sample(sim.ErrorModel("III", 0.1, v), OMEGA, 4, rng)
        assert S.shape == (4, 3, 3)
        assert np.all(np.linalg.eigvalsh(S) > 0)
    # the literal reading puts every eigenvalue at or above one
    S = sim.gen_sample(sim.ErrorModel("III", 0.1, "literal"), OMEGA, 50, rng)
    assert np.all(np.linalg.eigvalsh(S) >= 1 - 1e-12)


def test_model_three_default_log_outer():
    from scipy.linalg import expm, logm

    s = 0.1
    S = sim.gen_sample(sim.ErrorModel("III", s), OMEGA, 6, np.random.default_rng(9))
    X = np.random.default_rng(9).normal(0.0, s, (6, 3, 3))
    want = np.stack([expm(logm(OMEGA).real + x @ x.T) for x in X])
    assert np.allclose(S, want, rtol=1e-10, atol=1e-12)


def test_omega_must_be_pd(rng):
    with pytest.raises(NotPositiveDefinite):
        sim.gen_sample(sim.ErrorModel("I"), np.diag([1.0, 0.0]), 3, rng)


def _small(**kw):
    base = dict(omega_eigenvalues=(1.0, 0.3, 0.1), model=sim.ErrorModel("I"), n=10, reps=12, seed=9)
    base.update(kw)
    return sim.StudyConfig(**base)


def test_tiny_sigma_study():
    for tag in sim.MODELS:
        res = sim.run_study(_small(model=sim.ErrorModel(tag, 1e-8), reps=3))
        for st in res.stats.values():
            assert st.rmse_dE <= 1e-6 and st.rmse_dS <= 1e-6


def test_study_deterministic_across_threads():
    a = sim.run_study(_small())
    b = sim.run_study(_small(threads=4))
    assert sim.to_csv([a]) == sim.to_csv([b])
    for sym in a.losses:
        assert np.array_equal(a.losses[sym], b.losses[sym])


def test_study_losses_consistent():
    res = sim.run_study(_small())
    omega = np.diag([1.0, 0.3, 0.1])
    x = res.losses["S"]
    assert np.all(x[:, 2] >= 0)
    # replication 0 recomputed by hand
    S = sim.gen_sample(sim.ErrorModel("I"), omega, 10, sim.replication_rng(9, 0))
    from spdstats.means import frechet_mean
    est = frechet_mean(S, "procrustes").estimate
    assert x[0, 0] == pytest.approx(np.sum((est - omega) ** 2), rel=1e-10)
    assert x[0, 1] == pytest.approx(distance(est, omega, "procrustes") ** 2, rel=1e-8)
    assert x[0, 2] == pytest.approx(sim.stein_loss(est, omega), rel=1e-8)
    # order of replications does not matter
    perm = np.random.default_rng(0).permutation(len(x))
    assert math.sqrt(np.mean(x[perm, 0])) == pytest.approx(res.stats["S"].rmse_dE, rel=1e-12)


def test_failure_policy(monkeypatch):
    real = sim.frechet_mean
    calls = {"n": 0}

    def flaky(S, metric, *a, **k):
        if metric == "riemannian":
            calls["n"] += 1
            if calls["n"] == 1:
                raise NotPositiveDefinite("boom")
        return real(S, metric, *a, **k)

    monkeypatch.setattr(sim, "frechet_mean", flaky)
    with pytest.raises(StudyAborted):
        sim.run_study(_small(reps=10))
    calls["n"] = 0
    with pytest.warns(RuntimeWarning):
        res = sim.run_study(_small(reps=10, max_failure_rate=0.2))
    assert res.stats["R"].failures == 1 and res.stats["E"].failures == 0


def test_config_validation():
    with pytest.raises(InvalidInput):
        _small(estimators=("E", "Z"))
    with pytest.raises(InvalidInput):
        _small(omega_eigenvalues=(1.0, -1.0))
    with pytest.raises(InvalidInput):
        _small(reps=0)
    with pytest.raises(InvalidInput):
        _small(max_failure_rate=1.5)


def test_rotated_omega():
    cfg = _small(omega_rotation=3)
    om = cfg.omega()
    assert np.allclose(np.linalg.eigvalsh(om)[::-1], [1.0, 0.3, 0.1])
    assert not np.allclose(om, np.diag(np.diag(om)))


def test_table_configs_and_csv():
    cfgs = sim.table_configs(3, reps=2)
    assert [(c.model.tag, c.n) for c in cfgs] == [(m, n) for m in sim.MODELS for n in (10, 30)]
    assert cfgs[0].omega_eigenvalues == (1.0, 0.001, 0.001)
    res = sim.run_study(_small(reps=2, estimators=("E", "L")))
    text = sim.to_csv([res])
    lines = text.splitlines()
    assert lines[0] == "model,n,estimator,rmse_dE,rmse_dS,stein,failures"
    assert [ln.split(",")[2] for ln in lines[1:]] == ["E", "L"]
