import numpy as np
import pytest

from src.harness import ExperimentConfig, Task, aggregate, rate_slope, time_algorithms, track_quantile
from src.harness.bench import _track
from src.models import GaussLocation
from src.rng import make_rng
from src.sa import g3_kernel, qgrad_step, quantile_step


def test_compiled_tracker_matches_step_functions():
    rng = make_rng(0)
    y = rng.standard_normal(50)
    score = y.copy()
    z, q0 = 0.7, 0.1
    a_q, beta, a_d, alpha, a_h, eta, k0 = 0.8, 0.71, 1.2, 0.7, 0.5, 0.14, 3
    q_log, d_log = _track(y, score, z, q0, a_q, beta, a_d, alpha, a_h, eta, k0, 1)

    q, d = q0, np.zeros((1, 1))
    for k in range(y.size):
        base = max(k0 + k, 1)
        g1 = -float(y[k] <= q) * np.array([[score[k]]])
        g3 = np.array([g3_kernel(y[k], q, a_h / base ** eta)])
        d = qgrad_step(d, g1, g3, a_d / base ** alpha)
        q = quantile_step(q, z, np.array([y[k]]), a_q / base ** beta)
        assert q_log[k + 1] == pytest.approx(q, rel=1e-12, abs=1e-14)
        assert d_log[k + 1] == pytest.approx(d[0, 0], rel=1e-12, abs=1e-14)


def test_tracker_frame_layout():
    cfg = ExperimentConfig.for_task(Task.TRACKER_BENCH, iterations=1000, log_every=100, replications=1)
    frame = track_quantile(cfg, 4)
    assert list(frame.columns) == ["k", "q", "D", "sq_error", "grad_error"]
    assert frame["k"].tolist() == list(range(0, 1001, 100))
    true_q = GaussLocation().quantile(np.array([0.0]), 0.7)
    np.testing.assert_allclose(frame["sq_error"], (frame["q"] - true_q) ** 2)
    np.testing.assert_allclose(frame["grad_error"], (frame["D"] - 1.0) ** 2, atol=1e-8)
    assert frame.equals(track_quantile(cfg, 4))


def test_timing_table():
    frame = time_algorithms(grid_sizes=(9,), components=(2,), iterations=20)
    assert frame["algorithm"].tolist() == ["dm", "qf", "hybrid"]
    assert set(frame["params"]) == {6}
    assert (frame["ms_per_iter"] > 0).all()


@pytest.mark.slow
def test_quantile_tracker_rate():
    cfg = ExperimentConfig.for_task(Task.TRACKER_BENCH)
    frames = [track_quantile(cfg, cfg.replication_seed(i)) for i in range(cfg.replications)]
    slope = rate_slope(aggregate(frames, "sq_error"), 1e3, 1e5)
    assert -0.9 <= slope <= -0.5
    late = np.mean([f.loc[(f["k"] >= 10_000), "q"].mean() for f in frames])
    assert late == pytest.approx(0.52440, abs=0.02)


@pytest.mark.slow
def test_gradient_tracker_reaches_one():
    cfg = ExperimentConfig.for_task(Task.TRACKER_BENCH, replications=20)
    final = np.mean([track_quantile(cfg, cfg.replication_seed(i))["D"].iloc[-1] for i in range(cfg.replications)])
    assert abs(final - 1.0) < 0.1
