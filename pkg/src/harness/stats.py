from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import DimensionMismatchError, InsufficientDataError


BAND = (0.025, 0.975)
MIN_SLOPE_POINTS = 5


@dataclass(frozen=True, eq=False)
class AggregateCurve:
    """Mean and 95% band of one metric across replications at every logged k."""

    k: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    metric: str
    replications: int = 1

    def __post_init__(self):
        n = self.k.shape
        if self.mean.shape != n or self.lower.shape != n or self.upper.shape != n:
            raise DimensionMismatchError("curve columns must have equal length")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "k": self.k,
            "mean": self.mean,
            "lower": self.lower,
            "upper": self.upper,
            "metric": self.metric,
        })

    @property
    def final(self) -> float:
        return float(self.mean[-1])


def aggregate(frames: Sequence[pd.DataFrame], metric: str) -> AggregateCurve:
    """Average ``metric`` over replications, keeping only the k every run logged."""
    if not frames:
        raise InsufficientDataError("no replications to aggregate")
    table = pd.concat(
        [f.set_index("k")[metric].rename(i) for i, f in enumerate(frames)], axis=1, join="inner",
    ).sort_index()
    values = table.to_numpy(dtype=float)
    mean = values.mean(axis=1)
    lower, upper = np.quantile(values, BAND, axis=1)
    # interpolated quantiles of skewed samples can miss the mean
    lower = np.minimum(lower, mean)
    upper = np.maximum(upper, mean)
    return AggregateCurve(
        k=table.index.to_numpy(dtype=np.int64), mean=mean, lower=lower, upper=upper,
        metric=metric, replications=len(frames),
    )


def rate_slope(curve: AggregateCurve, k_min: float, k_max: float) -> float:
    """Least-squares slope of ``log(mean)`` against ``log(k)`` over ``[k_min, k_max]``."""
    mask = (curve.k >= k_min) & (curve.k <= k_max) & (curve.k > 0) & (curve.mean > 0)
    if np.count_nonzero(mask) < MIN_SLOPE_POINTS:
        raise InsufficientDataError(
            f"rate slope needs {MIN_SLOPE_POINTS} positive points in [{k_min}, {k_max}], "
            f"got {np.count_nonzero(mask)}"
        )
    fit = stats.linregress(np.log(curve.k[mask].astype(float)), np.log(curve.mean[mask]))
    return float(fit.slope)


def final_median(frames: Sequence[pd.DataFrame], metric: str) -> float:
    return float(np.median([f[metric].iloc[-1] for f in frames]))
