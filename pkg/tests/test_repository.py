import pytest

from src.database import Experiment, Repository, RunRecord


@pytest.mark.asyncio
async def test_experiment_lifecycle(tmp_path):
    async with Repository(tmp_path / "runs.db") as repo:
        exp_id = await repo.add_experiment(Experiment(
            task="portfolio", config_text="task.kind=portfolio\n", output_dir="/tmp/out", replications=2,
        ))
        stored = await repo.get_experiment(exp_id)
        assert stored.status == "running"
        assert stored.finished_at is None

        await repo.finish_experiment(exp_id, "done", 0.125)
        stored = await repo.get_experiment(exp_id)
        assert stored.status == "done"
        assert stored.median_metric == 0.125
        assert stored.finished_at is not None

        assert await repo.get_experiment(exp_id + 1) is None


@pytest.mark.asyncio
async def test_runs_upsert_and_nan(tmp_path):
    async with Repository(tmp_path / "runs.db") as repo:
        exp_id = await repo.add_experiment(Experiment(
            task="tracker-bench", config_text="", output_dir="out", replications=2,
        ))
        await repo.add_run(RunRecord(exp_id, 1, 11, 0.5, float("nan"), "out/run_1.csv", 3.0))
        await repo.add_run(RunRecord(exp_id, 0, 10, 0.2, None, "out/run_0.csv", 2.0))
        await repo.add_run(RunRecord(exp_id, 1, 11, 0.4, float("inf"), "out/run_1.csv", 4.0))

        runs = await repo.get_runs(exp_id)
        assert [r.replication for r in runs] == [0, 1]
        assert runs[1].final_metric == 0.4
        assert runs[1].final_drm is None
        assert len(runs) == 2


@pytest.mark.asyncio
async def test_list_filters_and_orders(tmp_path):
    async with Repository(tmp_path / "runs.db") as repo:
        for task in ("portfolio", "dppo", "portfolio"):
            await repo.add_experiment(Experiment(task=task, config_text="", output_dir="out", replications=1))
        latest = await repo.list_experiments(limit=2)
        assert [e.id for e in latest] == [3, 2]
        portfolio = await repo.list_experiments(task="portfolio")
        assert [e.id for e in portfolio] == [3, 1]
