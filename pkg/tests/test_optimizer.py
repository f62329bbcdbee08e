import numpy as np
import pytest

from src.errors import NonDifferentiableError, NonFiniteUpdateError
from src.harness import ExperimentConfig, Task, aggregate, rate_slope
from src.harness.runner import run_replication
from src.models import Box, GaussianMixtureModel, GaussLocation, ModelSample
from src.risk import parse_distortion, uniform_grid
from src.rng import make_rng
from src.sa import (
    Algorithm,
    HistoryRecord,
    RunHistory,
    SAConfig,
    SAState,
    Schedules,
    TrackerState,
    batching_step,
    dm_step,
    hybrid_step,
    project,
    qf_step,
    run,
)
from src.sa.optimizer import advance, empirical_quantiles, initial_state
from src.sa.schedules import portfolio_schedules


BOX = Box.cube(1, 2.5)
SCHEDULES = Schedules.from_initial(10, 0.25, 0.25, 0.1, 0.1)


def _config(algorithm, distortion="cvar:0.7", grid=None, **kwargs):
    return SAConfig(
        algorithm=algorithm,
        grid=grid or uniform_grid(9),
        distortion=parse_distortion(distortion),
        schedules=kwargs.pop("schedules", SCHEDULES),
        box=kwargs.pop("box", BOX),
        **kwargs,
    )


def _point(y, score=0.0):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return ModelSample(x=y, y=y.copy(), score=np.full((y.size, 1), score))


def _state(theta, q, D=None, rows=()):
    D = np.zeros((len(rows), 1)) if D is None else np.asarray(D, dtype=float)
    return SAState(theta=np.array([theta]), tracker=TrackerState(q=np.asarray(q, dtype=float), D=D, d_rows=rows))


def test_project_examples():
    box = Box.cube(2, 2.5)
    np.testing.assert_array_equal(project(np.array([3.0, -3.0]), box), [2.5, -2.5])
    np.testing.assert_array_equal(project(np.array([0.3, -1.0]), box), [0.3, -1.0])
    np.testing.assert_array_equal(project(np.array([2.5, -2.5]), box), [2.5, -2.5])


def test_dm_flat_weights_leave_theta():
    cfg = _config(Algorithm.DM, "cvar:0.7", uniform_grid(1))
    assert np.all(cfg.weights == 0.0)
    state = _state(0.4, [-0.4, 0.4], [[0.8]], (1,))
    assert dm_step(state, _point(0.1, 1.0), cfg).theta[0] == 0.4


def test_dm_single_interval_direction():
    cfg = _config(Algorithm.DM, "cvar:0.5", uniform_grid(1))
    assert cfg.weights[0] == pytest.approx(-1.0 / 3.0)
    state = _state(0.0, [-0.4, 0.4], [[0.8]], (1,))
    stepped = dm_step(state, _point(10.0), cfg)
    assert stepped.theta[0] == pytest.approx(0.1 * 0.8 / 3.0)
    assert stepped.k == 1


def test_dm_uses_gradients_from_before_the_update():
    cfg = _config(Algorithm.DM, "cvar:0.5", uniform_grid(1))
    state = _state(0.0, [-0.4, 0.4], [[0.0]], (1,))
    stepped = dm_step(state, _point(0.0, 5.0), cfg)
    assert stepped.theta[0] == 0.0
    assert stepped.D[0, 0] != 0.0


def test_qf_sample_above_quantiles_leaves_theta():
    cfg = _config(Algorithm.QF)
    state = _state(0.5, np.linspace(-1.0, 1.0, 10))
    assert qf_step(state, _point(5.0, 3.0), cfg).theta[0] == 0.5


def test_qf_equal_estimates_contribute_nothing():
    cfg = _config(Algorithm.QF, "mean")
    state = _state(0.5, np.zeros(10))
    assert qf_step(state, _point(-1.0, 3.0), cfg).theta[0] == 0.5


@pytest.mark.parametrize("spec", ["disc:5", "var:0.7"])
def test_qf_rejects_jumps(spec):
    with pytest.raises(NonDifferentiableError):
        _config(Algorithm.QF, spec, uniform_grid(98))


def test_hybrid_tracks_only_jump_rows():
    cfg = _config(Algorithm.HYBRID, "disc:5", uniform_grid(98))
    assert len(cfg.d_rows) == 3
    model = GaussLocation()
    state = initial_state(cfg, model, np.array([0.0]), make_rng(1))
    assert state.D.shape == (3, 1)
    assert hybrid_step(state, model.sample(state.theta, make_rng(2), 4), cfg).D.shape == (3, 1)


def _trajectory(cfg, model, step, iterations):
    rng = make_rng(cfg.seed)
    state = initial_state(cfg, model, cfg.box.uniform(rng), rng)
    path = [state.theta]
    for _ in range(iterations):
        state = step(state, model.sample(state.theta, rng, cfg.batch_size), cfg)
        path.append(state.theta)
    return np.array(path)


def test_hybrid_matches_qf_without_jumps():
    model = GaussianMixtureModel(10)
    kwargs = dict(
        grid=ExperimentConfig.for_task(Task.PORTFOLIO, "wang:-0.85").grid_obj(),
        schedules=portfolio_schedules("wang"),
        box=Box.cube(model.dim, 2.5),
        batch_size=4,
        seed=7,
    )
    qf = _config(Algorithm.QF, "wang:-0.85", **kwargs)
    hybrid = _config(Algorithm.HYBRID, "wang:-0.85", **kwargs)
    assert hybrid.d_rows == ()
    np.testing.assert_array_equal(
        _trajectory(qf, model, qf_step, 10_000),
        _trajectory(hybrid, model, hybrid_step, 10_000),
    )


def test_empirical_quantile_order_statistic():
    assert empirical_quantiles(np.array([4.0, 1.0, 3.0, 2.0]), np.array([0.5]))[0] == 2.0
    np.testing.assert_array_equal(empirical_quantiles(np.array([3.0, 1.0]), np.array([0.1, 0.9])), [1.0, 3.0])


def test_batching_identical_draws_leave_theta():
    cfg = _config(Algorithm.BATCHING, batch_size=4)
    state = _state(-0.7, np.linspace(-1.0, 1.0, 10))
    batch = [_point(1.5, s) for s in (1.0, -2.0, 0.5, 3.0)]
    stepped = batching_step(state, batch, cfg)
    assert stepped.theta[0] == -0.7
    np.testing.assert_array_equal(stepped.q, state.q)


def test_non_finite_update_raises():
    state = _state(0.0, [0.0, 1.0])
    with pytest.raises(NonFiniteUpdateError):
        advance(state, np.array([np.nan]), state.q, state.D)


def test_history_indices_increase():
    history = RunHistory(Algorithm.QF, 0)
    history.append(HistoryRecord(k=0, theta=(0.0,), drm=0.0, w2=None))
    with pytest.raises(ValueError):
        history.append(HistoryRecord(k=0, theta=(0.0,), drm=0.0, w2=None))
    frame = history.to_frame()
    assert list(frame.columns) == ["k", "theta_0", "drm", "w2", "ms"]
    assert np.isnan(frame["w2"].iloc[0])


def test_zero_iterations_gives_initial_record():
    cfg = _config(Algorithm.HYBRID, total_iterations=0, theta0=(0.5,))
    history = run(cfg, GaussLocation())
    assert [r.k for r in history.records] == [0]
    assert history.final.theta == (0.5,)


def test_same_seed_same_history():
    cfg = _config(Algorithm.DM, total_iterations=300, log_every=100, seed=3)
    first = run(cfg, GaussLocation()).to_frame().drop(columns="ms")
    second = run(cfg, GaussLocation()).to_frame().drop(columns="ms")
    assert list(first["k"]) == [0, 100, 200, 300]
    assert first.equals(second)


@pytest.mark.slow
@pytest.mark.parametrize("algorithm", [Algorithm.DM, Algorithm.QF, Algorithm.HYBRID])
def test_mean_maximization_reaches_box_edge(algorithm):
    schedules = Schedules.from_initial(100, 0.25, 0.25, 0.05, 0.1)
    cfg = _config(algorithm, "mean", schedules=schedules, total_iterations=100_000,
                  log_every=100_000, theta0=(2.0,), seed=5)
    assert run(cfg, GaussLocation()).final.theta[0] == pytest.approx(2.5, abs=0.05)


def _median_w2(distortion, algorithm, **overrides):
    cfg = ExperimentConfig.for_task(
        Task.PORTFOLIO, distortion, algorithm=algorithm, replications=20, log_every=200_000, **overrides
    )
    return float(np.median([run_replication(cfg, i).final_metric for i in range(cfg.replications)]))


@pytest.mark.slow
def test_portfolio_cvar_beats_batching():
    medians = {a: _median_w2("cvar:0.7", a) for a in Algorithm}
    for algorithm in (Algorithm.DM, Algorithm.QF, Algorithm.HYBRID):
        assert medians[algorithm] < 0.15
        assert medians[algorithm] < medians[Algorithm.BATCHING]


@pytest.mark.slow
def test_portfolio_discontinuous_hybrid():
    assert _median_w2("disc:5", Algorithm.HYBRID) < 0.2


@pytest.mark.slow
def test_qf_rate_on_curved_location():
    model = GaussLocation(curvature=1.0)
    schedules = Schedules.from_initial(100, 0.25, 0.25, 0.05, 0.1)
    frames = []
    for seed in range(20):
        cfg = _config(Algorithm.QF, "mean", schedules=schedules, total_iterations=100_000,
                      log_every=1000, theta0=(0.0,), seed=seed)
        frame = run(cfg, model).to_frame()
        frames.append(frame.assign(sq_error=(frame["theta_0"] - 1.0) ** 2))
    slope = rate_slope(aggregate(frames, "sq_error"), 1e3, 1e5)
    assert -0.9 <= slope <= -0.4
