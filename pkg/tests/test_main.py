import pytest

from src.harness import ExperimentConfig, Task, serialize
from src.main import async_main, build_parser, experiment_from_args


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    monkeypatch.setenv("DATA_DIR", str(tmp_path / "data"))
    monkeypatch.delenv("DRM_OPT_WORKERS", raising=False)
    monkeypatch.delenv("DRM_OPT_LOG_LEVEL", raising=False)


@pytest.mark.asyncio
async def test_oracle_command(capsys):
    assert await async_main(["oracle", "--distortion", "cvar:0.7", "--levels", "0.2", "0.9"]) == 0
    out = capsys.readouterr().out
    assert "1.527525232" in out
    assert "-0.654653671" in out


@pytest.mark.asyncio
async def test_oracle_identity_is_degenerate():
    assert await async_main(["oracle", "--distortion", "mean"]) == 1


@pytest.mark.asyncio
async def test_bad_environment_exit_code(monkeypatch):
    monkeypatch.setenv("DRM_OPT_WORKERS", "zero")
    assert await async_main(["runs"]) == 1


@pytest.mark.asyncio
async def test_bad_distortion_exit_code():
    assert await async_main(["portfolio", "--distortion", "bogus:1"]) == 1


@pytest.mark.asyncio
async def test_qf_on_jumps_exit_code():
    assert await async_main(["portfolio", "--distortion", "disc:5", "--algo", "qf"]) == 2


@pytest.mark.asyncio
async def test_bench_needs_subcommand():
    assert await async_main(["bench"]) == 2


@pytest.mark.asyncio
async def test_small_portfolio_run(tmp_path):
    out = tmp_path / "portfolio"
    code = await async_main([
        "portfolio", "--model", "gauss-location", "--grid", "uniform:9", "--iters", "100",
        "--reps", "1", "--log-every", "50", "--out", str(out), "--workers", "1",
    ])
    assert code == 0
    assert (out / "run_0.csv").exists()
    assert await async_main(["runs", "--task", "portfolio"]) == 0


@pytest.mark.asyncio
async def test_runs_lists_one_experiment(tmp_path, capsys):
    out = tmp_path / "portfolio"
    await async_main([
        "portfolio", "--model", "gauss-location", "--grid", "uniform:9", "--iters", "100",
        "--reps", "2", "--log-every", "50", "--out", str(out), "--workers", "1",
    ])
    capsys.readouterr()
    assert await async_main(["runs", "--experiment", "1"]) == 0
    shown = capsys.readouterr().out
    assert "experiment 1" in shown
    assert "final metric" in shown


@pytest.mark.asyncio
async def test_runs_unknown_experiment_exit_code():
    assert await async_main(["runs", "--experiment", "99"]) == 1


def test_config_file_with_flag_overrides(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text(serialize(ExperimentConfig.for_task(Task.PORTFOLIO, "wang:-0.85", replications=4)))
    args = build_parser().parse_args(["portfolio", "--config", str(path), "--reps", "2", "--algo", "qf"])
    cfg = experiment_from_args(Task.PORTFOLIO, args)
    assert cfg.replications == 2
    assert cfg.algorithm.value == "qf"
    assert cfg.grid == "sqrt:250"


def test_default_output_follows_task():
    args = build_parser().parse_args(["dppo", "--iters", "5"])
    cfg = experiment_from_args(Task.DPPO, args)
    assert str(cfg.output) == "results/dppo"
    assert cfg.iterations == 5
