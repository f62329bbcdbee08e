"""DM-form, QF-form and Hybrid tracker optimizers plus the batching baseline.

Every step consumes a batch of draws taken at the current parameter and returns a
new ``SAState``; states are never mutated in place.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import ConfigError, DimensionMismatchError, NonDifferentiableError, NonFiniteUpdateError
from ..models import Box, ModelSample, ObservableModel
from ..risk import DistortionFn, DistortionKind, Grid, QuantileFn, derivative, drm_value, jump_partition, wasserstein2, weights
from ..rng import make_rng
from .estimators import GAUSSIAN, KernelSpec, TrackerState, g1_score, g3_batch, indicators, qgrad_step, quantile_step, sort_clip
from .schedules import Schedules


logger = logging.getLogger(__name__)

WARMUP_DRAWS = 256
W2_RESOLUTION = 1000


class Algorithm(str, Enum):
    DM = "dm"
    QF = "qf"
    HYBRID = "hybrid"
    BATCHING = "batching"


@dataclass(frozen=True, eq=False)
class SAConfig:
    algorithm: Algorithm
    grid: Grid
    distortion: DistortionFn
    schedules: Schedules
    box: Box
    batch_size: int = 1
    total_iterations: int = 0
    seed: int = 0
    log_every: int = 500
    gap_lipschitz: float = 0.0
    theta0: Optional[tuple[float, ...]] = None
    kernel: KernelSpec = GAUSSIAN

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("sa.batch", "must be at least 1", str(self.batch_size))
        if self.total_iterations < 0:
            raise ConfigError("sa.iterations", "must be non-negative", str(self.total_iterations))
        if self.log_every < 1:
            raise ConfigError("sa.log_every", "must be at least 1", str(self.log_every))
        if self.gap_lipschitz < 0.0:
            raise ConfigError("sa.gap_lipschitz", "must be non-negative", str(self.gap_lipschitz))
        if self.theta0 is not None and len(self.theta0) != self.box.dim:
            raise ConfigError("model.theta0", f"needs {self.box.dim} values", str(len(self.theta0)))
        if self.algorithm is not Algorithm.BATCHING:
            self.schedules.check_timescales(self.algorithm in (Algorithm.DM, Algorithm.HYBRID))
        if self.algorithm is Algorithm.QF:
            self.qf_slopes  # raises when w jumps inside the grid

    @cached_property
    def weights(self) -> np.ndarray:
        """``w~(z_i) - w~(z_{i-1})`` for i = 1..N."""
        return weights(self.distortion, self.grid)

    @cached_property
    def partition(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return jump_partition(self.distortion, self.grid)

    @cached_property
    def smooth_slopes(self) -> np.ndarray:
        """``w'(1 - z_i)`` on intervals without a jump, zero on the others."""
        n = self.grid.size
        slopes = np.zeros(n)
        if self.distortion.kind is DistortionKind.VAR:
            return slopes
        jump, smooth = self.partition
        rows = np.asarray(smooth, dtype=int)
        if rows.size:
            slopes[rows - 1] = derivative(self.distortion, 1.0 - self.grid.levels[rows])
        return slopes

    @cached_property
    def qf_slopes(self) -> np.ndarray:
        jump, _ = self.partition
        if self.distortion.kind is DistortionKind.VAR or jump:
            raise NonDifferentiableError(
                f"{self.distortion.spec} jumps inside the grid; use the dm or hybrid algorithm"
            )
        return self.smooth_slopes

    @cached_property
    def d_rows(self) -> tuple[int, ...]:
        if self.algorithm is Algorithm.DM:
            return tuple(range(1, self.grid.size + 1))
        if self.algorithm is Algorithm.HYBRID:
            return self.partition[0]
        return ()


@dataclass(frozen=True)
class SAState:
    theta: np.ndarray
    tracker: TrackerState
    k: int = 0

    @property
    def q(self) -> np.ndarray:
        return self.tracker.q

    @property
    def D(self) -> np.ndarray:
        return self.tracker.D


@dataclass(frozen=True)
class HistoryRecord:
    k: int
    theta: tuple[float, ...]
    drm: float
    w2: Optional[float]
    ms: float = field(default=0.0, compare=False)


@dataclass
class RunHistory:
    algorithm: Algorithm
    seed: int
    records: list[HistoryRecord] = field(default_factory=list)

    def append(self, record: HistoryRecord) -> None:
        if self.records and record.k <= self.records[-1].k:
            raise ValueError(f"history indices must increase, got {record.k} after {self.records[-1].k}")
        self.records.append(record)

    @property
    def final(self) -> HistoryRecord:
        return self.records[-1]

    def to_frame(self) -> pd.DataFrame:
        dim = len(self.records[0].theta) if self.records else 0
        rows = [
            {
                "k": r.k,
                **{f"theta_{j}": v for j, v in enumerate(r.theta)},
                "drm": r.drm,
                "w2": np.nan if r.w2 is None else r.w2,
                "ms": r.ms,
            }
            for r in self.records
        ]
        columns = ["k", *(f"theta_{j}" for j in range(dim)), "drm", "w2", "ms"]
        return pd.DataFrame(rows, columns=columns)


def project(theta: np.ndarray, box: Box) -> np.ndarray:
    return np.clip(theta, box.lower, box.upper)


def initial_state(cfg: SAConfig, model: ObservableModel, theta0: np.ndarray, rng: np.random.Generator) -> SAState:
    """Quantiles from the empirical quantiles of a warm-up batch at ``theta0``; gradients at zero."""
    warm = model.sample(theta0, rng, WARMUP_DRAWS)
    q = sort_clip(np.quantile(warm.y, cfg.grid.levels), cfg.grid, cfg.gap_lipschitz)
    D = np.zeros((len(cfg.d_rows), theta0.size))
    return SAState(theta=np.array(theta0, dtype=float), tracker=TrackerState(q=q, D=D, d_rows=cfg.d_rows))


def _check_dims(state: SAState, sample: ModelSample, cfg: SAConfig) -> None:
    if sample.score.shape[1] != state.theta.size:
        raise DimensionMismatchError(
            f"score has {sample.score.shape[1]} entries, theta has {state.theta.size}"
        )
    if state.q.size != cfg.grid.levels.size:
        raise DimensionMismatchError(f"{cfg.grid.levels.size} quantile estimates expected, got {state.q.size}")


def advance(state: SAState, theta: np.ndarray, q: np.ndarray, D: np.ndarray) -> SAState:
    for name, value in (("theta", theta), ("q", q), ("D", D)):
        if not np.all(np.isfinite(value)):
            raise NonFiniteUpdateError(f"non-finite {name} update at iteration {state.k}")
    tracker = TrackerState(q=q, D=D, d_rows=state.tracker.d_rows)
    return SAState(theta=theta, tracker=tracker, k=state.k + 1)


def update_quantiles(state: SAState, sample: ModelSample, cfg: SAConfig, rho: float = 1.0) -> np.ndarray:
    stepped = quantile_step(state.q, cfg.grid.levels, sample.y, cfg.schedules.q(state.k), rho)
    return sort_clip(stepped, cfg.grid, cfg.gap_lipschitz)


def update_gradients(state: SAState, sample: ModelSample, cfg: SAConfig, rho: float = 1.0) -> np.ndarray:
    rows = np.asarray(state.tracker.d_rows, dtype=int)
    if rows.size == 0:
        return state.D
    q_rows = state.q[rows]
    g1 = g1_score(sample, q_rows)
    g3 = g3_batch(sample.y, q_rows, cfg.schedules.h(state.k), cfg.kernel)
    return qgrad_step(state.D, g1, g3, cfg.schedules.D(state.k), rho)


def qf_direction(sample: ModelSample, q: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """``sum_i G1(q_i) * slope_i * (q_i - q_{i-1})`` averaged over the batch."""
    coeff = slopes * np.diff(q)
    return -(sample.score.T @ (indicators(sample.y, q[1:]) @ coeff)) / sample.size


def dm_step(state: SAState, sample: ModelSample, cfg: SAConfig) -> SAState:
    _check_dims(state, sample, cfg)
    rows = np.asarray(state.tracker.d_rows, dtype=int)
    D = update_gradients(state, sample, cfg)
    q = update_quantiles(state, sample, cfg)
    # theta moves along the gradient rows from before this step's update
    direction = -(cfg.weights[rows - 1] @ state.D)
    theta = project(state.theta + cfg.schedules.theta(state.k) * direction, cfg.box)
    return advance(state, theta, q, D)


def qf_step(state: SAState, sample: ModelSample, cfg: SAConfig) -> SAState:
    _check_dims(state, sample, cfg)
    direction = qf_direction(sample, state.q, cfg.qf_slopes)
    q = update_quantiles(state, sample, cfg)
    theta = project(state.theta + cfg.schedules.theta(state.k) * direction, cfg.box)
    return advance(state, theta, q, state.D)


def hybrid_step(state: SAState, sample: ModelSample, cfg: SAConfig) -> SAState:
    _check_dims(state, sample, cfg)
    rows = np.asarray(state.tracker.d_rows, dtype=int)
    D = update_gradients(state, sample, cfg)
    direction = qf_direction(sample, state.q, cfg.smooth_slopes)
    if rows.size:
        # jump rows use the freshly updated gradients
        direction = direction - cfg.weights[rows - 1] @ D
    q = update_quantiles(state, sample, cfg)
    theta = project(state.theta + cfg.schedules.theta(state.k) * direction, cfg.box)
    return advance(state, theta, q, D)


def empirical_quantiles(y: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Order statistic ``ceil(z * n)`` (1-based) of the batch for every level."""
    ys = np.sort(np.asarray(y, dtype=float))
    idx = np.clip(np.ceil(np.asarray(levels) * ys.size).astype(int), 1, ys.size)
    return ys[idx - 1]


def _concat(batch: Union[ModelSample, Sequence[ModelSample]]) -> ModelSample:
    if isinstance(batch, ModelSample):
        return batch
    if not batch:
        raise DimensionMismatchError("batching step needs at least one draw")
    return ModelSample(
        x=np.concatenate([s.x for s in batch]),
        y=np.concatenate([s.y for s in batch]),
        score=np.vstack([s.score for s in batch]),
    )


def batching_step(state: SAState, batch: Union[ModelSample, Sequence[ModelSample]], cfg: SAConfig) -> SAState:
    """Single-timescale baseline: batch quantiles replace the tracked ones; ``state.q``
    keeps its warm-up values."""
    sample = _concat(batch)
    _check_dims(state, sample, cfg)
    q_batch = empirical_quantiles(sample.y, cfg.grid.levels)
    direction = qf_direction(sample, q_batch, cfg.smooth_slopes)
    theta = project(state.theta + cfg.schedules.theta(state.k) * direction, cfg.box)
    return advance(state, theta, state.q, state.D)


STEPS: dict[Algorithm, Callable[[SAState, ModelSample, SAConfig], SAState]] = {
    Algorithm.DM: dm_step,
    Algorithm.QF: qf_step,
    Algorithm.HYBRID: hybrid_step,
    Algorithm.BATCHING: batching_step,
}


def _record(state: SAState, cfg: SAConfig, model: ObservableModel, oracle: Optional[QuantileFn], ms: float) -> HistoryRecord:
    quantiles = model.quantile_fn(state.theta)
    drm = drm_value(quantiles, cfg.distortion, cfg.grid)
    w2 = None if oracle is None else wasserstein2(quantiles, oracle, W2_RESOLUTION)
    return HistoryRecord(k=state.k, theta=tuple(float(v) for v in state.theta), drm=drm, w2=w2, ms=ms)


def run(
    cfg: SAConfig,
    model: ObservableModel,
    oracle: Optional[QuantileFn] = None,
    on_record: Optional[Callable[[HistoryRecord], None]] = None,
) -> RunHistory:
    """Run ``cfg.total_iterations`` steps from a seeded start and log every ``cfg.log_every``.

    ``ms`` in each record is the wall-clock time spent stepping since the start,
    excluding the time spent evaluating the records themselves.
    """
    rng = make_rng(cfg.seed)
    theta0 = np.array(cfg.theta0, dtype=float) if cfg.theta0 is not None else cfg.box.uniform(rng)
    model.check_theta(theta0, cfg.box)
    state = initial_state(cfg, model, theta0, rng)
    step = STEPS[cfg.algorithm]

    history = RunHistory(algorithm=cfg.algorithm, seed=cfg.seed)
    history.append(_record(state, cfg, model, oracle, 0.0))
    elapsed = 0.0
    for _ in range(cfg.total_iterations):
        started = time.perf_counter()
        sample = model.sample(state.theta, rng, cfg.batch_size)
        state = step(state, sample, cfg)
        elapsed += time.perf_counter() - started
        if state.k % cfg.log_every == 0 or state.k == cfg.total_iterations:
            record = _record(state, cfg, model, oracle, elapsed * 1000.0)
            history.append(record)
            logger.debug("%s seed=%d k=%d drm=%.5f w2=%s", cfg.algorithm.value, cfg.seed, record.k, record.drm, record.w2)
            if on_record is not None:
                on_record(record)

    final = history.final
    logger.info(
        "%s run seed=%d finished after %d iterations: drm=%.5f w2=%s",
        cfg.algorithm.value, cfg.seed, final.k, final.drm,
        "n/a" if final.w2 is None else f"{final.w2:.5f}",
    )
    return history
