"""Single-step building blocks shared by every tracker-based optimizer.

All operations accept a batch of draws and average over it; a batch of one gives
the plain single-sample recursions.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import DimensionMismatchError, DomainError
from ..models import ModelSample
from ..risk import Grid


ArrayLike = Union[float, np.ndarray]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise DomainError(f"unsupported kernel {self.kind!r}")

    def __call__(self, u: ArrayLike) -> ArrayLike:
        return INV_SQRT_2PI * np.exp(-0.5 * np.square(u))


GAUSSIAN = KernelSpec()


@dataclass(frozen=True)
class TrackerState:
    """Quantile estimates at every grid level and quantile-gradient rows.

    ``d_rows`` holds the 1-based interval indices whose gradient is tracked; row j of
    ``D`` belongs to level ``d_rows[j]``.
    """

    q: np.ndarray
    D: np.ndarray
    d_rows: tuple[int, ...] = ()

    def __post_init__(self):
        if self.q.ndim != 1:
            raise DimensionMismatchError(f"quantile estimates must be a vector, got {self.q.shape}")
        if self.D.ndim != 2 or self.D.shape[0] != len(self.d_rows):
            raise DimensionMismatchError(
                f"{len(self.d_rows)} gradient rows expected, got D of shape {self.D.shape}"
            )

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.D)))


def indicators(y: ArrayLike, q: ArrayLike) -> np.ndarray:
    """``1{y_b <= q_i}`` as a (batch, levels) float matrix."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    return (ys[:, None] <= qs[None, :]).astype(float)


def g1_score(sample: ModelSample, q: ArrayLike) -> np.ndarray:
    """Batch mean of ``-1{y <= q} * score``, an unbiased estimate of ``-grad F(q; theta)``.

    A scalar ``q`` gives a parameter vector; a vector of levels gives one row per level.
    """
    ind = indicators(sample.y, q)
    g = -(ind.T @ sample.score) / sample.size
    return g[0] if np.ndim(q) == 0 else g


def g3_kernel(y: ArrayLike, q: ArrayLike, h: float, kernel: KernelSpec = GAUSSIAN) -> ArrayLike:
    if not h > 0.0:
        raise DomainError(f"kernel bandwidth must be positive, got {h}")
    return kernel((np.asarray(y, dtype=float) - np.asarray(q, dtype=float)) / h) / h


def g3_batch(y: ArrayLike, q: ArrayLike, h: float, kernel: KernelSpec = GAUSSIAN) -> np.ndarray:
    """Batch mean of the kernel density estimate at every level in ``q``."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    return np.mean(g3_kernel(ys[:, None], qs[None, :], h, kernel), axis=0)


def quantile_step(q: ArrayLike, z: ArrayLike, y: ArrayLike, gamma_q: float, rho: float = 1.0) -> ArrayLike:
    """``q + gamma_q * (z - rho * 1{y <= q})`` with the indicator averaged over the batch ``y``."""
    hit = np.mean(indicators(y, q), axis=0)
    out = np.asarray(q, dtype=float) + gamma_q * (np.asarray(z, dtype=float) - rho * hit.reshape(np.shape(q)))
    return float(out) if np.ndim(q) == 0 else out


def qgrad_step(D: np.ndarray, g1: np.ndarray, g3: ArrayLike, gamma_d: float, rho: float = 1.0) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    g3 = np.asarray(g3, dtype=float)
    if D.ndim == 2 and g3.ndim == 1:
        g3 = g3[:, None]
    return D + gamma_d * rho * (np.asarray(g1, dtype=float) - g3 * D)


def sort_clip(q: np.ndarray, g: Grid, lipschitz: float = 0.0) -> np.ndarray:
    """Sort the estimates and widen every gap to at least ``lipschitz * (z_i - z_{i-1})``."""
    if lipschitz < 0.0:
        raise DomainError(f"gap constant must be non-negative, got {lipschitz}")
    q = np.sort(np.asarray(q, dtype=float))
    if q.shape != g.levels.shape:
        raise DimensionMismatchError(f"{g.levels.size} quantile estimates expected, got {q.size}")
    if lipschitz == 0.0 or q.size == 1:
        return q
    gaps = np.maximum(np.diff(q), lipschitz * np.diff(g.levels))
    return np.concatenate([q[:1], q[0] + np.cumsum(gaps)])
