from .artifacts import read_frame, render_svg, run_csv_path, write_frame, write_svg
from .bench import time_algorithms, track_quantile
from .experiment import ExperimentConfig, Task, load, parse, parse_grid, serialize
from .runner import ExperimentResult, ReplicationResult, run_experiment, run_replication
from .stats import AggregateCurve, aggregate, final_median, rate_slope

__all__ = [
    "AggregateCurve",
    "ExperimentConfig",
    "ExperimentResult",
    "ReplicationResult",
    "Task",
    "aggregate",
    "final_median",
    "load",
    "parse",
    "parse_grid",
    "rate_slope",
    "read_frame",
    "render_svg",
    "run_csv_path",
    "run_experiment",
    "run_replication",
    "serialize",
    "time_algorithms",
    "track_quantile",
    "write_frame",
    "write_svg",
]
