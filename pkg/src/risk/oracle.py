"""Analytic targets: the extreme-case quantile function under mean-0 / variance-1
moment constraints, grid-based DRM evaluation and the Wasserstein-2 distance."""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ..errors import DegenerateOracleError, DomainError
from .distortion import DistortionFn, Grid, concave_envelope, evaluate


QuantileFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class WorstCaseQuantile:
    """``F*^{-1}(z) = c^{-1/2} (w*'(1 - z) - 1)`` with ``w*`` the concave envelope.

    The envelope is piecewise linear, so the normalizing integral ``c`` is summed
    exactly segment by segment.
    """

    envelope: DistortionFn
    scale: float

    @classmethod
    def build(cls, w: DistortionFn, resolution: int = 100_000) -> "WorstCaseQuantile":
        envelope = concave_envelope(w, resolution)
        widths = np.diff(envelope.knots_x)
        c = float(np.sum(widths * (envelope.slopes - 1.0) ** 2))
        if c <= 1e-14:
            raise DegenerateOracleError(
                f"{w.spec} has an identity concave envelope; every mean-0/variance-1 law is extreme"
            )
        return cls(envelope=envelope, scale=c ** -0.5)

    def __call__(self, z: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        zs = np.asarray(z, dtype=float)
        if np.any(zs <= 0.0) or np.any(zs >= 1.0):
            raise DomainError("worst-case quantile is defined on (0, 1)")
        # left derivative of w* at knots
        slope = np.asarray(self.envelope.left_slope(1.0 - zs), dtype=float)
        values = self.scale * (slope - 1.0)
        return float(values) if np.ndim(z) == 0 else values

    def moments(self) -> tuple[float, float]:
        """Mean and second moment, integrated exactly over the constant pieces."""
        widths = np.diff(self.envelope.knots_x)
        values = self.scale * (self.envelope.slopes - 1.0)
        return float(widths @ values), float(widths @ (values * values))


def worst_case_quantile(w: DistortionFn, z: Union[float, np.ndarray], resolution: int = 100_000):
    return WorstCaseQuantile.build(w, resolution)(z)


def _extrapolate(x0: float, y0, x1: float, y1, x):
    return y0 + (x - x0) * (y1 - y0) / (x1 - x0)


def drm_value(q: QuantileFn, w: DistortionFn, g: Grid) -> float:
    """Midpoint rule for ``-int q dw~`` on the grid plus the two boundary intervals.

    Boundary intervals use the quantile function extrapolated linearly from the
    nearest two grid levels, evaluated at the boundary midpoints.
    """
    lv = g.levels
    inner_q = np.asarray(q(g.eval_points), dtype=float)
    reflected = np.asarray(evaluate(w, 1.0 - lv), dtype=float)
    total = -float(np.dot(inner_q, np.diff(reflected)))

    if lv.size >= 2:
        edge_q = np.asarray(q(np.array([lv[0], lv[1], lv[-2], lv[-1]])), dtype=float)
        low = _extrapolate(lv[0], edge_q[0], lv[1], edge_q[1], 0.5 * lv[0])
        high = _extrapolate(lv[-2], edge_q[2], lv[-1], edge_q[3], 0.5 * (lv[-1] + 1.0))
    else:
        low = high = float(np.asarray(q(lv), dtype=float)[0])
    # w~(0) = 1 and w~(1) = 0
    total -= low * (reflected[0] - 1.0)
    total -= high * (0.0 - reflected[-1])
    return total


def wasserstein2(q1: QuantileFn, q2: QuantileFn, resolution: int = 1000) -> float:
    if resolution < 2:
        raise DomainError(f"quadrature resolution must be >= 2, got {resolution}")
    z = (np.arange(resolution) + 0.5) / resolution
    diff = np.asarray(q1(z), dtype=float) - np.asarray(q2(z), dtype=float)
    return float(np.sqrt(np.mean(diff * diff)))
