import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Optional

from .config import Config, load_config
from .database.repository import Repository
from .errors import ConfigError, DegenerateOracleError, DrmOptError, InsufficientDataError
from .harness import ExperimentConfig, Task, load, rate_slope, run_experiment, serialize, time_algorithms, write_frame
from .risk import WorstCaseQuantile, drm_value, parse_distortion, uniform_grid
from .ui.menu import MenuUI, console


logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

ORACLE_LEVELS = (0.1, 0.3, 0.5, 0.69, 0.71, 0.9)
ORACLE_GRID = 10_000
RATE_WINDOW = (1e3, 1e5)

# argparse destination -> ExperimentConfig field
OVERRIDES = {
    "distortion": "distortion",
    "algo": "algorithm",
    "iters": "iterations",
    "reps": "replications",
    "seed": "seed",
    "out": "output",
    "batch": "batch",
    "batch_scale": "batch_scale",
    "log_every": "log_every",
    "model": "model",
    "grid": "grid",
    "k0": "sample_interval",
    "eps": "tolerance",
    "horizon": "horizon",
    "hidden": "hidden",
    "echelons": "echelons",
    "discount": "discount",
    "eval_episodes": "eval_episodes",
    "beta": "beta",
    "level": "level",
}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="dotenv experiment file; flags override its values")
    parser.add_argument("--iters", type=int)
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path)
    parser.add_argument("--log-every", type=int)
    parser.add_argument("--workers", type=int, help="replication pool size (default DRM_OPT_WORKERS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drm-opt", description="Optimizers for distortion risk measures")
    sub = parser.add_subparsers(dest="command")

    portfolio = sub.add_parser("portfolio", help="robust portfolio selection over Gaussian mixtures")
    _common(portfolio)
    portfolio.add_argument("--distortion")
    portfolio.add_argument("--algo", choices=["dm", "qf", "hybrid", "batching"])
    portfolio.add_argument("--batch", type=int)
    portfolio.add_argument("--batch-scale", type=int, help="multiply batch and theta rate (5 or 10 for the baseline variants)")
    portfolio.add_argument("--model")
    portfolio.add_argument("--grid", help="uniform:N or sqrt:M")

    dppo = sub.add_parser("dppo", help="DRM policy optimization on the inventory chain")
    _common(dppo)
    dppo.add_argument("--distortion")
    dppo.add_argument("--k0", type=int, help="iterations between fresh episodes")
    dppo.add_argument("--eps", type=float, help="importance ratio tolerance")
    dppo.add_argument("--horizon", type=int)
    dppo.add_argument("--hidden", type=int)
    dppo.add_argument("--echelons", type=int)
    dppo.add_argument("--discount", type=float)
    dppo.add_argument("--eval-episodes", type=int)

    bench = sub.add_parser("bench", help="tracker and timing benchmarks")
    bench_sub = bench.add_subparsers(dest="bench")
    tracker = bench_sub.add_parser("tracker", help="quantile tracker error at a fixed parameter")
    _common(tracker)
    tracker.add_argument("--beta", type=float)
    tracker.add_argument("--level", type=float)
    timing = bench_sub.add_parser("timing", help="per-iteration cost of DM, QF and Hybrid")
    timing.add_argument("--grid-sizes", type=int, nargs="+", default=[49, 99, 199])
    timing.add_argument("--components", type=int, nargs="+", default=[5, 10])
    timing.add_argument("--iters", type=int, default=2000)
    timing.add_argument("--distortion", default="cvar:0.7")
    timing.add_argument("--seed", type=int, default=0)
    timing.add_argument("--out", type=Path)

    oracle = sub.add_parser("oracle", help="extreme-case quantiles of a distortion")
    oracle.add_argument("--distortion", default="cvar:0.7")
    oracle.add_argument("--levels", type=float, nargs="+", default=list(ORACLE_LEVELS))

    runs = sub.add_parser("runs", help="list recorded experiments")
    runs.add_argument("--limit", type=int, default=20)
    runs.add_argument("--task", choices=[t.value for t in Task])
    runs.add_argument("--experiment", type=int, help="show the recorded runs of one experiment")
    return parser


def experiment_from_args(task: Task, args: argparse.Namespace) -> ExperimentConfig:
    overrides = {
        field: getattr(args, dest) for dest, field in OVERRIDES.items()
        if getattr(args, dest, None) is not None
    }
    if getattr(args, "config", None):
        return load(args.config).with_overrides(**overrides)
    overrides.setdefault("output", Path("results") / task.value)
    distortion = overrides.pop("distortion", None)
    return ExperimentConfig.for_task(task, distortion, **overrides)


async def run_task(cfg: ExperimentConfig, config: Config, workers: Optional[int] = None) -> int:
    async with Repository(config.db_path) as repo:
        result = await run_experiment(cfg, workers or config.workers, repo)

    curve = result.curve
    rows = [(r.index, r.seed, r.final_metric, r.final_drm) for r in result.replications]
    MenuUI.show_summary(
        f"{cfg.task.value} · {cfg.distortion} · {cfg.replications} runs",
        curve.metric, rows, (curve.final, float(curve.lower[-1]), float(curve.upper[-1])),
    )
    if cfg.task is Task.TRACKER_BENCH:
        try:
            slope = rate_slope(curve, *RATE_WINDOW)
            console.print(f"log-log slope of the mean squared error over k in [1e3, 1e5]: [bold]{slope:.3f}[/bold]\n")
        except InsufficientDataError as e:
            MenuUI.show_info(str(e))
    if result.baseline is not None:
        evaluated = [("random", result.baseline.mean, result.baseline.quantiles)]
        for r in result.replications:
            if r.initial_evaluation is not None:
                evaluated.append((f"initial seed {r.seed}", r.initial_evaluation.mean, r.initial_evaluation.quantiles))
            if r.evaluation is not None:
                evaluated.append((f"dppo seed {r.seed}", r.evaluation.mean, r.evaluation.quantiles))
        MenuUI.show_returns(evaluated)
    MenuUI.show_success(f"Artifacts written to {result.output}")
    return 0


def show_oracle(spec: str, levels: list[float]) -> int:
    w = parse_distortion(spec)
    try:
        oracle = WorstCaseQuantile.build(w)
    except DegenerateOracleError as e:
        MenuUI.show_error(str(e))
        return 1
    values = [float(oracle(z)) for z in levels]
    drm = drm_value(oracle, w, uniform_grid(ORACLE_GRID))
    MenuUI.show_oracle(w.spec, levels, values, drm, oracle.moments())
    return 0


def run_timing(args: argparse.Namespace) -> int:
    frame = time_algorithms(args.grid_sizes, args.components, args.iters, args.distortion, args.seed)
    MenuUI.show_timing(frame)
    if args.out:
        path = write_frame(frame, Path(args.out) / "timing.csv")
        MenuUI.show_success(f"Timings written to {path}")
    return 0


async def list_runs(config: Config, limit: int, task: Optional[str]) -> int:
    async with Repository(config.db_path) as repo:
        experiments = await repo.list_experiments(limit, task)
    MenuUI.show_experiments(experiments)
    return 0


async def show_experiment(config: Config, experiment_id: int) -> int:
    async with Repository(config.db_path) as repo:
        experiment = await repo.get_experiment(experiment_id)
        runs = await repo.get_runs(experiment_id) if experiment else []
    if experiment is None:
        MenuUI.show_error(f"no experiment with id {experiment_id}")
        return 1
    nan = float("nan")
    rows = [
        (r.replication, r.seed, nan if r.final_metric is None else r.final_metric,
         nan if r.final_drm is None else r.final_drm)
        for r in runs
    ]
    MenuUI.show_summary(f"experiment {experiment.id} · {experiment.task} · {experiment.status}", "final metric", rows)
    console.print(f"[dim]{experiment.output_dir}[/dim]\n")
    return 0


async def interactive(config: Config) -> int:
    MenuUI.show_welcome()
    choice = await MenuUI.select_task()
    if choice is None:
        console.print("[dim]Cancelled.[/dim]")
        return 0
    if choice == "runs":
        return await list_runs(config, 20, None)
    if choice == "oracle":
        return show_oracle(await MenuUI.select_distortion(), list(ORACLE_LEVELS))

    task = Task(choice)
    overrides = {}
    if task is Task.TRACKER_BENCH:
        distortion = None
    else:
        distortion = await MenuUI.select_distortion("cvar:0.7" if task is Task.PORTFOLIO else "mean")
    if task is Task.PORTFOLIO:
        overrides["algorithm"] = await MenuUI.select_algorithm()
    defaults = ExperimentConfig.for_task(task, distortion)
    overrides["iterations"] = await MenuUI.ask_number("Iterations:", defaults.iterations)
    overrides["replications"] = await MenuUI.ask_number("Replications:", defaults.replications)
    overrides["output"] = Path(await MenuUI.ask_output(str(Path("results") / task.value)))

    cfg = defaults.with_overrides(**overrides)
    MenuUI.show_config(serialize(cfg))
    if not await MenuUI.confirm("Run this experiment?"):
        console.print("[dim]Cancelled.[/dim]")
        return 0
    return await run_task(cfg, config)


async def async_main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config()
    except ConfigError as e:
        MenuUI.show_error(str(e))
        console.print("\nCheck the DRM_OPT_* variables in your environment or .env file.")
        return 1
    logging.getLogger().setLevel(config.log_level)

    try:
        if args.command is None:
            return await interactive(config)
        if args.command == "oracle":
            return show_oracle(args.distortion, args.levels)
        if args.command == "runs":
            if args.experiment is not None:
                return await show_experiment(config, args.experiment)
            return await list_runs(config, args.limit, args.task)
        if args.command == "bench":
            if args.bench == "timing":
                return run_timing(args)
            if args.bench != "tracker":
                MenuUI.show_error("choose a benchmark: tracker or timing")
                return 2
            return await run_task(experiment_from_args(Task.TRACKER_BENCH, args), config, args.workers)
        return await run_task(experiment_from_args(Task(args.command), args), config, args.workers)
    except ConfigError as e:
        MenuUI.show_error(str(e))
        return 1
    except DrmOptError as e:
        MenuUI.show_error(str(e))
        return 2


def main():
    try:
        exit_code = asyncio.run(async_main())
        sys.exit(exit_code)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted.[/yellow]")
        sys.exit(130)


if __name__ == "__main__":
    main()
