from .estimators import KernelSpec, TrackerState, g1_score, g3_kernel, qgrad_step, quantile_step, sort_clip
from .optimizer import (
    Algorithm,
    HistoryRecord,
    RunHistory,
    SAConfig,
    SAState,
    batching_step,
    dm_step,
    hybrid_step,
    project,
    qf_step,
    run,
)
from .schedules import Schedule, Schedules, portfolio_schedules

__all__ = [
    "Algorithm",
    "HistoryRecord",
    "KernelSpec",
    "RunHistory",
    "SAConfig",
    "SAState",
    "Schedule",
    "Schedules",
    "TrackerState",
    "batching_step",
    "dm_step",
    "g1_score",
    "g3_kernel",
    "hybrid_step",
    "portfolio_schedules",
    "project",
    "qf_step",
    "qgrad_step",
    "quantile_step",
    "run",
    "sort_clip",
]
