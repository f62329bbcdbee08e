from .distortion import (
    DistortionFn,
    DistortionKind,
    Grid,
    concave_envelope,
    derivative,
    evaluate,
    identity,
    jump_partition,
    parse_distortion,
    piecewise_linear,
    sqrt_grid,
    uniform_grid,
    weights,
)
from .oracle import QuantileFn, WorstCaseQuantile, drm_value, wasserstein2, worst_case_quantile

__all__ = [
    "DistortionFn",
    "DistortionKind",
    "Grid",
    "QuantileFn",
    "WorstCaseQuantile",
    "concave_envelope",
    "derivative",
    "drm_value",
    "evaluate",
    "identity",
    "jump_partition",
    "parse_distortion",
    "piecewise_linear",
    "sqrt_grid",
    "uniform_grid",
    "wasserstein2",
    "weights",
    "worst_case_quantile",
]
