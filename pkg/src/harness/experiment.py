"""Experiment configuration: one frozen record per experiment, stored as dotenv text.

Keys carry their section as a dotted prefix (``sa.algorithm``, ``schedule.k0``...);
the serializer groups them under ``# [section]`` comments so the file can be edited by
hand and re-read with ``dotenv_values``.
"""

import io
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional

from dotenv import dotenv_values

from ..errors import ConfigError, DegenerateOracleError, DomainError
from ..inventory import DPPOConfig, EchelonParams
from ..models import Box, ObservableModel, parse_model
from ..risk import DistortionFn, Grid, WorstCaseQuantile, parse_distortion, sqrt_grid, uniform_grid
from ..sa import Algorithm, SAConfig, Schedules
from ..sa.schedules import ALPHA, BETA, ETA, GAMMA, PORTFOLIO_CONSTANTS


class Task(str, Enum):
    PORTFOLIO = "portfolio"
    DPPO = "dppo"
    TRACKER_BENCH = "tracker-bench"


# k0, gamma_D, gamma_q, gamma_theta, h0
DPPO_CONSTANTS = (250_000, 5.0, 1e-3, 2.5e-4, 2.5)
TRACKER_CONSTANTS = (1, 1.0, 1.0, 1.0, 1.0)


def _tuple(text: str) -> Optional[tuple[float, ...]]:
    text = text.strip()
    if not text:
        return None
    return tuple(float(v) for v in text.split(","))


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def _key(name: str, parse: Callable[[str], Any] = str):
    return {"key": name, "parse": parse}


@dataclass(frozen=True)
class ExperimentConfig:
    task: Task = field(default=Task.PORTFOLIO, metadata=_key("task.kind", Task))
    replications: int = field(default=1, metadata=_key("task.replications", int))
    seed: int = field(default=0, metadata=_key("task.seed", int))
    output: Path = field(default=Path("results"), metadata=_key("output.dir", Path))

    model: str = field(default="mixture:d=10", metadata=_key("model.spec"))
    half_width: float = field(default=2.5, metadata=_key("model.half_width", float))
    theta0: Optional[tuple[float, ...]] = field(default=None, metadata=_key("model.theta0", _tuple))

    algorithm: Algorithm = field(default=Algorithm.HYBRID, metadata=_key("sa.algorithm", Algorithm))
    distortion: str = field(default="cvar:0.7", metadata=_key("sa.distortion"))
    grid: str = field(default="uniform:99", metadata=_key("sa.grid"))
    iterations: int = field(default=200_000, metadata=_key("sa.iterations", int))
    batch: int = field(default=4, metadata=_key("sa.batch", int))
    batch_scale: int = field(default=1, metadata=_key("sa.batch_scale", int))
    log_every: int = field(default=500, metadata=_key("sa.log_every", int))
    gap_lipschitz: float = field(default=0.0, metadata=_key("sa.gap_lipschitz", float))

    k0: int = field(default=500, metadata=_key("schedule.k0", int))
    gamma_d: float = field(default=0.25, metadata=_key("schedule.gamma_d", float))
    gamma_q: float = field(default=0.25, metadata=_key("schedule.gamma_q", float))
    gamma_theta: float = field(default=0.0625, metadata=_key("schedule.gamma_theta", float))
    h0: float = field(default=0.01, metadata=_key("schedule.h0", float))
    alpha: float = field(default=ALPHA, metadata=_key("schedule.alpha", float))
    beta: float = field(default=BETA, metadata=_key("schedule.beta", float))
    gamma: float = field(default=GAMMA, metadata=_key("schedule.gamma", float))
    eta: float = field(default=ETA, metadata=_key("schedule.eta", float))

    sample_interval: int = field(default=250, metadata=_key("dppo.k0", int))
    tolerance: float = field(default=0.2, metadata=_key("dppo.eps", float))
    horizon: int = field(default=100, metadata=_key("dppo.horizon", int))
    hidden: int = field(default=32, metadata=_key("dppo.hidden", int))
    echelons: int = field(default=3, metadata=_key("dppo.echelons", int))
    discount: float = field(default=0.99, metadata=_key("dppo.discount", float))
    warmup_episodes: int = field(default=32, metadata=_key("dppo.warmup", int))
    eval_episodes: int = field(default=1000, metadata=_key("dppo.eval_episodes", int))

    level: float = field(default=0.7, metadata=_key("bench.level", float))

    def __post_init__(self):
        for name, key, kind in (("task", "task.kind", Task), ("algorithm", "sa.algorithm", Algorithm)):
            try:
                object.__setattr__(self, name, kind(getattr(self, name)))
            except ValueError:
                raise ConfigError(key, "unknown value", str(getattr(self, name))) from None
        object.__setattr__(self, "output", Path(self.output))
        if self.theta0 is not None:
            object.__setattr__(self, "theta0", tuple(float(v) for v in self.theta0))
        if self.replications < 1:
            raise ConfigError("task.replications", "must be at least 1", str(self.replications))
        if self.batch_scale < 1:
            raise ConfigError("sa.batch_scale", "must be at least 1", str(self.batch_scale))
        if self.half_width <= 0.0:
            raise ConfigError("model.half_width", "must be positive", str(self.half_width))
        if self.eval_episodes < 0:
            raise ConfigError("dppo.eval_episodes", "must be non-negative", str(self.eval_episodes))
        self.validate()

    @classmethod
    def for_task(cls, task: Task, distortion: Optional[str] = None, **overrides) -> "ExperimentConfig":
        """Defaults of ``task`` with the schedule constants of its distortion filled in."""
        task = Task(task)
        if task is Task.PORTFOLIO:
            spec = distortion or "cvar:0.7"
            kind = _distortion("sa.distortion", spec).kind.value
            constants = PORTFOLIO_CONSTANTS.get(kind, PORTFOLIO_CONSTANTS["cvar"])
            base = {"grid": "sqrt:250" if kind == "wang" else "uniform:99"}
        elif task is Task.DPPO:
            spec = distortion or "mean"
            constants = DPPO_CONSTANTS
            base = {"iterations": 50_000, "batch": 1, "grid": "uniform:99"}
        else:
            spec = distortion or "mean"
            constants = TRACKER_CONSTANTS
            base = {
                "model": "gauss-location", "theta0": (0.0,), "iterations": 100_000,
                "replications": 100, "batch": 1, "log_every": 100,
            }
        k0, gamma_d, gamma_q, gamma_theta, h0 = constants
        values = dict(task=task, distortion=spec, k0=k0, gamma_d=gamma_d, gamma_q=gamma_q,
                      gamma_theta=gamma_theta, h0=h0, **base)
        values.update(overrides)
        return cls(**values)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def validate(self) -> None:
        """Build every object the run needs so bad values fail before any replication starts."""
        self.distortion_fn()
        self.grid_obj()
        if self.task is Task.DPPO:
            self.dppo_config(self.seed)
            return
        model = self.model_obj()
        if self.task is Task.PORTFOLIO:
            self.sa_config(self.seed, model)
            return
        if model.dim != 1:
            raise ConfigError("model.spec", "the tracker benchmark needs a one-parameter model", self.model)
        if not 0.0 < self.level < 1.0:
            raise ConfigError("bench.level", "must lie in (0, 1)", str(self.level))
        if not 0.5 < self.beta <= 1.0:
            raise ConfigError("schedule.beta", "must lie in (0.5, 1]", str(self.beta))

    def replication_seed(self, index: int) -> int:
        return self.seed + index

    def distortion_fn(self) -> DistortionFn:
        return _distortion("sa.distortion", self.distortion)

    def grid_obj(self) -> Grid:
        return parse_grid(self.grid)

    def model_obj(self) -> ObservableModel:
        try:
            return parse_model(self.model)
        except DomainError as e:
            raise ConfigError("model.spec", str(e), self.model) from None

    def box(self, model: ObservableModel) -> Box:
        return Box.cube(model.dim, self.half_width)

    def schedules(self) -> Schedules:
        return Schedules.from_initial(
            self.k0, self.gamma_d, self.gamma_q, self.gamma_theta, self.h0,
            alpha=self.alpha, beta=self.beta, gamma=self.gamma, eta=self.eta,
        )

    def sa_config(self, seed: int, model: Optional[ObservableModel] = None) -> SAConfig:
        """Optimizer settings; ``batch_scale`` multiplies both the batch and the theta rate."""
        model = model or self.model_obj()
        schedules = self.schedules()
        if self.batch_scale > 1:
            schedules = replace(schedules, theta=schedules.theta.scaled(self.batch_scale))
        return SAConfig(
            algorithm=self.algorithm,
            grid=self.grid_obj(),
            distortion=self.distortion_fn(),
            schedules=schedules,
            box=self.box(model),
            batch_size=self.batch * self.batch_scale,
            total_iterations=self.iterations,
            seed=seed,
            log_every=self.log_every,
            gap_lipschitz=self.gap_lipschitz,
            theta0=self.theta0,
        )

    def dppo_config(self, seed: int) -> DPPOConfig:
        try:
            params = EchelonParams.first(self.echelons)
        except DomainError as e:
            raise ConfigError("dppo.echelons", str(e), str(self.echelons)) from None
        return DPPOConfig(
            distortion=self.distortion_fn(),
            grid=self.grid_obj(),
            params=params,
            schedules=self.schedules(),
            sample_interval=self.sample_interval,
            tolerance=self.tolerance,
            horizon=self.horizon,
            discount=self.discount,
            hidden=self.hidden,
            total_iterations=self.iterations,
            seed=seed,
            log_every=self.log_every,
            warmup_episodes=self.warmup_episodes,
        )

    def oracle(self) -> Optional[WorstCaseQuantile]:
        """Extreme-case quantile function; portfolio tasks with a non-trivial envelope only."""
        if self.task is not Task.PORTFOLIO:
            return None
        try:
            return WorstCaseQuantile.build(self.distortion_fn())
        except DegenerateOracleError:
            return None

    @property
    def metric(self) -> str:
        if self.task is Task.DPPO:
            return "mean_return"
        if self.task is Task.TRACKER_BENCH:
            return "sq_error"
        return "w2" if self.oracle() is not None else "drm"


def _distortion(key: str, text: str) -> DistortionFn:
    try:
        return parse_distortion(text)
    except DomainError as e:
        raise ConfigError(key, str(e), text) from None


def parse_grid(text: str) -> Grid:
    """``uniform:N`` or ``sqrt:M``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        size = int(arg)
        if name == "uniform":
            return uniform_grid(size)
        if name == "sqrt":
            return sqrt_grid(size)
    except (ValueError, DomainError) as e:
        raise ConfigError("sa.grid", str(e) or "bad grid size", text) from None
    raise ConfigError("sa.grid", "must be uniform:N or sqrt:M", text)


def _quote(text: str) -> str:
    if text and not any(c in text for c in " #'\"\\"):
        return text
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize(cfg: ExperimentConfig) -> str:
    lines: list[str] = []
    section = None
    for f in fields(cfg):
        key = f.metadata["key"]
        prefix = key.split(".", 1)[0]
        if prefix != section:
            if lines:
                lines.append("")
            lines.append(f"# [{prefix}]")
            section = prefix
        lines.append(f"{key}={_quote(_format(getattr(cfg, f.name)))}")
    return "\n".join(lines) + "\n"


def parse(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read dotenv text over ``base`` (the task defaults when omitted)."""
    raw = dotenv_values(stream=io.StringIO(text), interpolate=False)
    by_key = {f.metadata["key"]: f for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - set(by_key))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")

    values: dict[str, Any] = {}
    for key, value in raw.items():
        f = by_key[key]
        value = value or ""
        try:
            parsed = f.metadata["parse"](value) if value or f.name == "theta0" else None
        except ValueError:
            raise ConfigError(key, "cannot parse value", value) from None
        if parsed is None and f.name != "theta0":
            raise ConfigError(key, "value is empty")
        if isinstance(parsed, float) and not math.isfinite(parsed):
            raise ConfigError(key, "must be finite", value)
        values[f.name] = parsed

    if base is None:
        task = values.get("task", Task.PORTFOLIO)
        base = ExperimentConfig.for_task(task, values.get("distortion"))
    return replace(base, **values)


def load(path: Path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", "file not found", str(path))
    return parse(path.read_text(), base)
