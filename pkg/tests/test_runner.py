import numpy as np
import pytest

from src.database import Repository
from src.harness import ExperimentConfig, Task, parse, read_frame, run_experiment


def _portfolio(output, **overrides):
    values = dict(
        model="gauss-location", algorithm="dm", grid="uniform:9", iterations=200, log_every=100,
        replications=2, output=output,
    )
    values.update(overrides)
    return ExperimentConfig.for_task(Task.PORTFOLIO, "cvar:0.7", **values)


def _without_clock(path):
    return read_frame(path).drop(columns="ms")


@pytest.mark.asyncio
async def test_portfolio_artifacts_and_rerun(tmp_path):
    first = await run_experiment(_portfolio(tmp_path / "a"), show_progress=False)
    second = await run_experiment(_portfolio(tmp_path / "b"), show_progress=False)

    for name in ("config.env", "run_0.csv", "run_1.csv", "aggregate.csv", "curve.svg"):
        assert (tmp_path / "a" / name).exists()
    assert parse((tmp_path / "a" / "config.env").read_text()) == _portfolio(tmp_path / "a")

    frame = _without_clock(tmp_path / "a" / "run_0.csv")
    assert list(frame.columns) == ["k", "theta_0", "drm", "w2"]
    assert frame["k"].tolist() == [0, 100, 200]
    for name in ("run_0.csv", "run_1.csv"):
        assert _without_clock(tmp_path / "a" / name).equals(_without_clock(tmp_path / "b" / name))
    assert (tmp_path / "a" / "aggregate.csv").read_bytes() == (tmp_path / "b" / "aggregate.csv").read_bytes()

    assert [r.seed for r in first.replications] == [0, 1]
    assert first.curve.metric == "w2"
    assert first.curve.final == pytest.approx(np.mean([r.final_metric for r in second.replications]))


@pytest.mark.asyncio
async def test_worker_pool_matches_inline(tmp_path):
    inline = await run_experiment(_portfolio(tmp_path / "inline", replications=3), workers=1, show_progress=False)
    pooled = await run_experiment(_portfolio(tmp_path / "pool", replications=3), workers=2, show_progress=False)
    assert [r.index for r in pooled.replications] == [0, 1, 2]
    assert [r.final_metric for r in pooled.replications] == [r.final_metric for r in inline.replications]


@pytest.mark.asyncio
async def test_experiment_is_recorded(tmp_path):
    async with Repository(tmp_path / "runs.db") as repo:
        result = await run_experiment(_portfolio(tmp_path / "out"), repository=repo, show_progress=False)
        experiment = await repo.get_experiment(result.experiment_id)
        runs = await repo.get_runs(result.experiment_id)

    assert experiment.status == "done"
    assert experiment.median_metric == pytest.approx(np.median([r.final_metric for r in result.replications]))
    assert [r.replication for r in runs] == [0, 1]
    assert runs[1].csv_path.endswith("run_1.csv")


@pytest.mark.asyncio
async def test_tracker_experiment(tmp_path):
    cfg = ExperimentConfig.for_task(
        Task.TRACKER_BENCH, iterations=2000, log_every=100, replications=3, output=tmp_path,
    )
    result = await run_experiment(cfg, show_progress=False)
    assert result.curve.k.size == 21
    assert result.curve.metric == "sq_error"
    assert all(np.isnan(r.final_drm) for r in result.replications)


@pytest.mark.asyncio
async def test_dppo_experiment_writes_evaluation(tmp_path):
    cfg = ExperimentConfig.for_task(
        Task.DPPO, "mean", iterations=10, horizon=10, hidden=4, echelons=1, replications=1,
        eval_episodes=5, warmup_episodes=2, log_every=5, output=tmp_path,
    )
    result = await run_experiment(cfg, show_progress=False)
    assert result.baseline is not None
    assert result.replications[0].evaluation.episodes == 5
    evaluation = read_frame(tmp_path / "evaluation.csv")
    assert evaluation["policy"].tolist() == ["random", "initial", "dppo"]
    assert result.replications[0].initial_evaluation.episodes == 5
    assert (tmp_path / "policy_0" / "theta.bin").exists()
    assert read_frame(tmp_path / "run_0.csv")["k"].tolist() == [0, 5, 10]
