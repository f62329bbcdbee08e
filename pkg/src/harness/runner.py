import asyncio
import logging
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import pandas as pd
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

from ..database.repository import Experiment, Repository, RunRecord
from ..inventory import evaluate_policy, random_policy_returns, train
from ..inventory.dppo import ReturnSummary, save_checkpoint
from ..rng import child_rngs
from ..sa import run
from .artifacts import run_csv_path, wants_log, write_frame, write_svg
from .bench import track_quantile
from .experiment import ExperimentConfig, Task, serialize
from .stats import AggregateCurve, aggregate, final_median


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReplicationResult:
    index: int
    seed: int
    frame: pd.DataFrame
    final_metric: float
    final_drm: float
    elapsed_ms: float
    evaluation: Optional[ReturnSummary] = None
    initial_evaluation: Optional[ReturnSummary] = None


@dataclass
class ExperimentResult:
    output: Path
    curve: AggregateCurve
    replications: list[ReplicationResult] = field(default_factory=list)
    baseline: Optional[ReturnSummary] = None
    experiment_id: Optional[int] = None


def run_replication(cfg: ExperimentConfig, index: int) -> ReplicationResult:
    """One seeded run of the configured task; executed inside a worker process."""
    seed = cfg.replication_seed(index)
    started = time.perf_counter()
    evaluation = initial_evaluation = None
    if cfg.task is Task.PORTFOLIO:
        model = cfg.model_obj()
        frame = run(cfg.sa_config(seed, model), model, cfg.oracle()).to_frame()
        final_drm = float(frame["drm"].iloc[-1])
    elif cfg.task is Task.DPPO:
        dppo_cfg = cfg.dppo_config(seed)
        result = train(dppo_cfg)
        frame = result.to_frame()
        final_drm = float(frame["drm"].iloc[-1])
        save_checkpoint(cfg.output / f"policy_{index}", result.theta, dppo_cfg, cfg.iterations)
        if cfg.eval_episodes:
            # both policies see the same evaluation stream
            _, eval_rng = child_rngs(seed, 2)
            evaluation = evaluate_policy(dppo_cfg, result.theta, cfg.eval_episodes, eval_rng)
            _, eval_rng = child_rngs(seed, 2)
            initial_evaluation = evaluate_policy(dppo_cfg, result.initial_theta, cfg.eval_episodes, eval_rng)
    else:
        frame = track_quantile(cfg, seed)
        final_drm = float("nan")
    metric = frame[cfg.metric].iloc[-1]
    return ReplicationResult(
        index=index,
        seed=seed,
        frame=frame,
        final_metric=float(metric),
        final_drm=final_drm,
        elapsed_ms=(time.perf_counter() - started) * 1000.0,
        evaluation=evaluation,
        initial_evaluation=initial_evaluation,
    )


def random_baseline(cfg: ExperimentConfig) -> ReturnSummary:
    dppo_cfg = cfg.dppo_config(cfg.seed)
    _, rng = child_rngs(cfg.seed + cfg.replications, 2)
    returns = random_policy_returns(dppo_cfg.params, max(cfg.eval_episodes, 1), cfg.horizon, cfg.discount, rng)
    return ReturnSummary.of(returns)


def _evaluation_frame(results: list[ReplicationResult], baseline: ReturnSummary) -> pd.DataFrame:
    labelled = [("random", -1, baseline)]
    for r in results:
        labelled += [("initial", r.seed, r.initial_evaluation), ("dppo", r.seed, r.evaluation)]
    rows = []
    for label, seed, summary in labelled:
        if summary is None:
            continue
        row = {"policy": label, "seed": seed, "mean": summary.mean}
        row.update({f"q{level:g}": value for level, value in summary.quantiles.items()})
        rows.append(row)
    return pd.DataFrame(rows)


async def _gather(cfg: ExperimentConfig, workers: int, on_done: Callable[[ReplicationResult], None]) -> list[ReplicationResult]:
    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(workers)
    pool: Optional[Executor] = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

    async def one(index: int) -> ReplicationResult:
        async with semaphore:
            result = await loop.run_in_executor(pool, run_replication, cfg, index)
        on_done(result)
        return result

    try:
        results = await asyncio.gather(*(one(i) for i in range(cfg.replications)))
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return sorted(results, key=lambda r: r.index)


async def run_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    repository: Optional[Repository] = None,
    show_progress: bool = True,
) -> ExperimentResult:
    """Run every replication, then write per-run CSVs, the aggregate curve and its plot."""
    output = Path(cfg.output)
    metric = cfg.metric
    output.mkdir(parents=True, exist_ok=True)
    config_text = serialize(cfg)
    (output / "config.env").write_text(config_text)

    experiment_id = None
    if repository is not None:
        experiment_id = await repository.add_experiment(Experiment(
            task=cfg.task.value, config_text=config_text, output_dir=str(output.resolve()),
            replications=cfg.replications,
        ))

    logger.info("%s experiment: %d replications on %d workers -> %s", cfg.task.value, cfg.replications, workers, output)
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        disable=not show_progress,
    ) as progress:
        task = progress.add_task(f"[cyan]{cfg.task.value} replications...", total=cfg.replications)

        def on_done(result: ReplicationResult) -> None:
            progress.advance(task)
            logger.debug("replication %d (seed %d) finished: %s=%.6g", result.index, result.seed, metric, result.final_metric)

        try:
            results = await _gather(cfg, max(workers, 1), on_done)
        except Exception:
            if repository is not None and experiment_id is not None:
                await repository.finish_experiment(experiment_id, "failed")
            raise

    for result in results:
        path = write_frame(result.frame, run_csv_path(output, result.index))
        if repository is not None and experiment_id is not None:
            await repository.add_run(RunRecord(
                experiment_id=experiment_id, replication=result.index, seed=result.seed,
                final_metric=result.final_metric, final_drm=result.final_drm,
                csv_path=str(path), elapsed_ms=result.elapsed_ms,
            ))

    curve = aggregate([r.frame for r in results], metric)
    write_frame(curve.to_frame(), output / "aggregate.csv")
    log_y = cfg.task is Task.TRACKER_BENCH or wants_log(curve.mean)
    write_svg(curve, output / "curve.svg", f"{cfg.task.value}: {metric} over {cfg.replications} runs",
              log_x=cfg.task is Task.TRACKER_BENCH, log_y=log_y)

    baseline = None
    if cfg.task is Task.DPPO and cfg.eval_episodes:
        baseline = random_baseline(cfg)
        write_frame(_evaluation_frame(results, baseline), output / "evaluation.csv")

    if repository is not None and experiment_id is not None:
        await repository.finish_experiment(experiment_id, "done", final_median([r.frame for r in results], metric))
    logger.info("%s experiment finished: final mean %s=%.6g", cfg.task.value, metric, curve.final)
    return ExperimentResult(output=output, curve=curve, replications=results, baseline=baseline, experiment_id=experiment_id)
