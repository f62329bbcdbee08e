"""DRM-based proximal policy optimization on the inventory chain.

One episode is generated every ``sample_interval`` iterations (or sooner, when the
importance ratio of the stored episode leaves ``[1 - eps, 1 + eps]``) and reused by
the Hybrid-form trackers in between, each update weighted by that ratio. The theta
rate is measured in units of the tracked return spread.
"""

import json
import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from ..errors import ConfigError, DimensionMismatchError
from ..models import ModelSample
from ..risk import DistortionFn, Grid, identity, uniform_grid
from ..rng import make_rng
from ..sa import Algorithm, SAConfig, SAState, Schedules, TrackerState, project, sort_clip
from ..sa.optimizer import advance, qf_direction, update_gradients, update_quantiles
from .env import EchelonParams, InventoryState, env_step, observation_size, simulate_orders
from .policy import PolicySpec


logger = logging.getLogger(__name__)

# burn-in 2.5e5; initial gradient, quantile, parameter rates and bandwidth
DPPO_SCHEDULES = Schedules.from_initial(250_000, 5.0, 1e-3, 2.5e-4, 2.5)
EVAL_LEVELS = (0.1, 0.3, 0.5, 0.7, 0.9)
RANDOM_MAX_ORDER = 20
RETURN_SCALE_FLOOR = 1.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    ret: float
    log_prob: float
    score: np.ndarray

    @property
    def horizon(self) -> int:
        return self.rewards.size

    def as_sample(self) -> ModelSample:
        """The episode as a single draw of the return with its policy score."""
        y = np.array([self.ret])
        return ModelSample(x=y, y=y.copy(), score=self.score[None, :])


def rollout(
    policy: PolicySpec,
    theta: np.ndarray,
    horizon: int,
    discount: float,
    rng: np.random.Generator,
    params: EchelonParams = EchelonParams(),
) -> Trajectory:
    if horizon < 1:
        raise ConfigError("dppo.horizon", "must be at least 1", str(horizon))
    if not 0.0 < discount <= 1.0:
        raise ConfigError("dppo.discount", "must lie in (0, 1]", str(discount))
    state = InventoryState.initial(params)
    observations = np.empty((horizon, policy.obs_dim))
    actions = np.empty((horizon, policy.act_dim))
    rewards = np.empty(horizon)
    for t in range(horizon):
        observations[t] = state.features()
        actions[t] = policy.act(theta, observations[t], rng)
        # the density stays continuous; rounding happens at the warehouse
        orders = np.rint(np.maximum(actions[t], 0.0))
        state, rewards[t] = env_step(state, orders, rng, params)
    ret = float(np.dot(discount ** np.arange(horizon), rewards))
    log_prob, score = policy.log_prob_grad(theta, observations, actions)
    return Trajectory(observations, actions, rewards, ret, log_prob, score)


def is_ratio(policy: PolicySpec, trajectory: Trajectory, theta_new: np.ndarray, theta_gen: np.ndarray) -> float:
    """Product of per-step density ratios, accumulated in log space."""
    new = float(np.sum(policy.log_prob(theta_new, trajectory.observations, trajectory.actions)))
    gen = float(np.sum(policy.log_prob(theta_gen, trajectory.observations, trajectory.actions)))
    return math.exp(new - gen)


def within_tolerance(rho: float, tolerance: float) -> bool:
    return 1.0 - tolerance <= rho <= 1.0 + tolerance


def return_scale(q: np.ndarray) -> float:
    """Spread of the tracked return quantiles, floored at ``RETURN_SCALE_FLOOR``.

    The theta rate is divided by it so the step size does not grow with the
    magnitude of the returns.
    """
    return max(float(q[-1] - q[0]), RETURN_SCALE_FLOOR)


@dataclass(frozen=True, eq=False)
class DPPOConfig:
    distortion: DistortionFn = identity()
    grid: Grid = uniform_grid(99)
    params: EchelonParams = EchelonParams()
    schedules: Schedules = DPPO_SCHEDULES
    sample_interval: int = 250
    tolerance: float = 0.2
    horizon: int = 100
    discount: float = 0.99
    hidden: int = 32
    total_iterations: int = 0
    seed: int = 0
    log_every: int = 500
    warmup_episodes: int = 32

    def __post_init__(self):
        if self.sample_interval < 1:
            raise ConfigError("dppo.k0", "must be at least 1", str(self.sample_interval))
        if not 0.0 < self.tolerance < 1.0:
            raise ConfigError("dppo.eps", "must lie in (0, 1)", str(self.tolerance))
        if self.horizon < 1:
            raise ConfigError("dppo.horizon", "must be at least 1", str(self.horizon))
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError("dppo.discount", "must lie in (0, 1]", str(self.discount))
        if self.hidden < 1:
            raise ConfigError("dppo.hidden", "must be at least 1", str(self.hidden))
        if self.warmup_episodes < 1:
            raise ConfigError("dppo.warmup", "must be at least 1", str(self.warmup_episodes))
        self.sa  # validates the tracker schedules and the policy box

    @cached_property
    def policy(self) -> PolicySpec:
        return PolicySpec(obs_dim=observation_size(self.params), act_dim=self.params.echelons, hidden=self.hidden)

    @cached_property
    def sa(self) -> SAConfig:
        return SAConfig(
            algorithm=Algorithm.HYBRID,
            grid=self.grid,
            distortion=self.distortion,
            schedules=self.schedules,
            box=self.policy.box(),
            total_iterations=self.total_iterations,
            seed=self.seed,
            log_every=self.log_every,
        )


@dataclass(frozen=True)
class DPPOState:
    sa: SAState
    trajectory: Optional[Trajectory] = None
    theta_gen: Optional[np.ndarray] = None
    resample: bool = True
    episodes: int = 0
    skipped: int = 0

    @property
    def k(self) -> int:
        return self.sa.k


def initial_dppo_state(cfg: DPPOConfig, rng: np.random.Generator, theta0: Optional[np.ndarray] = None) -> DPPOState:
    """Random network weights and quantiles warm-started from a few episodes."""
    policy = cfg.policy
    theta = policy.init_theta(rng) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (policy.size,):
        raise DimensionMismatchError(f"policy expects {policy.size} parameters, got {theta.shape}")
    returns = [rollout(policy, theta, cfg.horizon, cfg.discount, rng, cfg.params).ret for _ in range(cfg.warmup_episodes)]
    q = sort_clip(np.quantile(returns, cfg.grid.levels), cfg.grid)
    D = np.zeros((len(cfg.sa.d_rows), policy.size))
    tracker = TrackerState(q=q, D=D, d_rows=cfg.sa.d_rows)
    return DPPOState(sa=SAState(theta=theta, tracker=tracker))


def dppo_iteration(state: DPPOState, cfg: DPPOConfig, rng: np.random.Generator) -> DPPOState:
    policy = cfg.policy
    sa_cfg = cfg.sa
    current = state.sa
    trajectory, theta_gen, episodes = state.trajectory, state.theta_gen, state.episodes
    if trajectory is None or state.resample or current.k % cfg.sample_interval == 0:
        trajectory = rollout(policy, current.theta, cfg.horizon, cfg.discount, rng, cfg.params)
        theta_gen = current.theta.copy()
        episodes += 1

    rho = is_ratio(policy, trajectory, current.theta, theta_gen)
    if not within_tolerance(rho, cfg.tolerance):
        logger.debug("k=%d ratio %.4f outside tolerance, resampling", current.k, rho)
        held = SAState(theta=current.theta, tracker=current.tracker, k=current.k + 1)
        return DPPOState(sa=held, trajectory=trajectory, theta_gen=theta_gen, resample=True,
                         episodes=episodes, skipped=state.skipped + 1)

    _, score = policy.log_prob_grad(current.theta, trajectory.observations, trajectory.actions)
    y = np.array([trajectory.ret])
    sample = ModelSample(x=y, y=y.copy(), score=score[None, :])
    rows = np.asarray(current.tracker.d_rows, dtype=int)
    D = update_gradients(current, sample, sa_cfg, rho)
    direction = rho * qf_direction(sample, current.q, sa_cfg.smooth_slopes)
    if rows.size:
        direction = direction - sa_cfg.weights[rows - 1] @ D
    q = update_quantiles(current, sample, sa_cfg, rho)
    step = sa_cfg.schedules.theta.scaled(1.0 / return_scale(current.q))
    theta = project(current.theta + step(current.k) * direction, sa_cfg.box)
    return DPPOState(sa=advance(current, theta, q, D), trajectory=trajectory, theta_gen=theta_gen,
                     resample=False, episodes=episodes, skipped=state.skipped)


@dataclass(frozen=True)
class TrainingRecord:
    k: int
    episodes: int
    mean_return: float
    drm: float
    skipped: int
    ms: float = field(default=0.0, compare=False)


@dataclass
class TrainingResult:
    theta: np.ndarray
    initial_theta: np.ndarray
    records: list[TrainingRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        columns = ["k", "episodes", "mean_return", "drm", "skipped", "ms"]
        return pd.DataFrame([vars(r) for r in self.records], columns=columns)


def tracked_drm(state: DPPOState, cfg: DPPOConfig) -> float:
    """DRM of the return read off the tracked quantiles."""
    return float(-(cfg.sa.weights @ state.sa.q[1:]))


def train(
    cfg: DPPOConfig,
    theta0: Optional[np.ndarray] = None,
    on_record: Optional[Callable[[TrainingRecord], None]] = None,
) -> TrainingResult:
    rng = make_rng(cfg.seed)
    state = initial_dppo_state(cfg, rng, theta0)
    result = TrainingResult(theta=state.sa.theta, initial_theta=state.sa.theta.copy())
    recent: list[float] = []
    elapsed = 0.0

    def record() -> None:
        mean_return = float(np.mean(recent)) if recent else float("nan")
        rec = TrainingRecord(k=state.k, episodes=state.episodes, mean_return=mean_return,
                             drm=tracked_drm(state, cfg), skipped=state.skipped, ms=elapsed * 1000.0)
        result.records.append(rec)
        logger.debug("dppo seed=%d k=%d episodes=%d mean_return=%.3f", cfg.seed, rec.k, rec.episodes, mean_return)
        if on_record is not None:
            on_record(rec)
        recent.clear()

    record()
    for _ in range(cfg.total_iterations):
        started = time.perf_counter()
        before = state.episodes
        state = dppo_iteration(state, cfg, rng)
        elapsed += time.perf_counter() - started
        if state.episodes > before:
            recent.append(state.trajectory.ret)
        if state.k % cfg.log_every == 0 or state.k == cfg.total_iterations:
            record()

    result.theta = state.sa.theta
    logger.info("dppo run seed=%d done: %d iterations, %d episodes, %d skipped updates",
                cfg.seed, state.k, state.episodes, state.skipped)
    return result


@dataclass(frozen=True)
class ReturnSummary:
    mean: float
    quantiles: dict[float, float]
    episodes: int

    @classmethod
    def of(cls, returns: np.ndarray, levels=EVAL_LEVELS) -> "ReturnSummary":
        returns = np.asarray(returns, dtype=float)
        values = np.quantile(returns, levels)
        return cls(mean=float(returns.mean()), quantiles=dict(zip(levels, map(float, values))), episodes=returns.size)


def evaluate_policy(
    cfg: DPPOConfig,
    theta: np.ndarray,
    episodes: int,
    rng: np.random.Generator,
) -> ReturnSummary:
    """Return distribution of a frozen stochastic policy."""
    returns = [rollout(cfg.policy, theta, cfg.horizon, cfg.discount, rng, cfg.params).ret for _ in range(episodes)]
    return ReturnSummary.of(np.asarray(returns))


def random_policy_returns(
    params: EchelonParams,
    episodes: int,
    horizon: int,
    discount: float,
    rng: np.random.Generator,
    max_order: int = RANDOM_MAX_ORDER,
) -> np.ndarray:
    """Returns of orders drawn uniformly from ``0..max_order`` every period."""
    orders = rng.integers(0, max_order + 1, size=(episodes, horizon, params.echelons)).astype(float)
    return simulate_orders(orders, rng, params, discount)


def save_checkpoint(directory: Path, theta: np.ndarray, cfg: DPPOConfig, iteration: int) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.asarray(theta, dtype=np.float64).tofile(directory / "theta.bin")
    meta = {
        "dimension": int(theta.size),
        "hidden": cfg.hidden,
        "echelons": cfg.params.echelons,
        "iteration": iteration,
        "seed": cfg.seed,
        "distortion": cfg.distortion.spec,
    }
    (directory / "theta.json").write_text(json.dumps(meta, indent=2))
    return directory / "theta.bin"


def load_checkpoint(directory: Path) -> tuple[np.ndarray, dict]:
    directory = Path(directory)
    meta = json.loads((directory / "theta.json").read_text())
    theta = np.fromfile(directory / "theta.bin", dtype=np.float64)
    if theta.size != meta["dimension"]:
        raise DimensionMismatchError(f"checkpoint holds {theta.size} values, sidecar says {meta['dimension']}")
    return theta, meta
