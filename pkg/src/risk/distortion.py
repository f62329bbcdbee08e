"""Distortion functions, quantile-level grids and concave envelopes.

A distortion ``w`` maps [0, 1] onto [0, 1] with ``w(0) = 0`` and ``w(1) = 1``.
The optimizers work with the reflected function ``w~(z) = w(1 - z)``, so the
grid weights and the jump partition are expressed in that coordinate.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.stats import norm

from ..errors import DomainError, NonDifferentiableError


logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DISC_JUMPS = (0.3, 0.5, 0.7)


class DistortionKind(str, Enum):
    VAR = "var"
    CVAR = "cvar"
    WANG = "wang"
    SSHAPE = "sshape"
    CPT = "cpt"
    DISC = "disc"
    TABLE = "table"


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _out(z: ArrayLike, values: np.ndarray) -> ArrayLike:
    if np.ndim(z) == 0:
        return float(values)
    return values


@dataclass(frozen=True, eq=False)
class DistortionFn:
    kind: DistortionKind
    alpha: float = 0.0
    knots_x: Optional[np.ndarray] = field(default=None, repr=False)
    knots_y: Optional[np.ndarray] = field(default=None, repr=False)
    label: Optional[str] = None

    def __post_init__(self):
        kind = self.kind
        a = self.alpha
        if kind in (DistortionKind.VAR, DistortionKind.CVAR) and not 0.0 <= a < 1.0:
            raise DomainError(f"{kind.value} level must lie in [0, 1), got {a}")
        if kind in (DistortionKind.SSHAPE, DistortionKind.DISC) and a <= 0.0:
            raise DomainError(f"{kind.value} parameter must be positive, got {a}")
        if kind is DistortionKind.CPT and not 0.28 <= a <= 1.0:
            # below ~0.28 the CPT weighting stops being monotone
            raise DomainError(f"cpt parameter must lie in [0.28, 1], got {a}")
        if kind is DistortionKind.TABLE:
            xs, ys = self.knots_x, self.knots_y
            if xs is None or ys is None or len(xs) != len(ys) or len(xs) < 2:
                raise DomainError("piecewise-linear table needs matching knot arrays")
            if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
                raise DomainError("table knots must increase strictly from 0 to 1")
            if ys[0] != 0.0 or ys[-1] != 1.0 or np.any(np.diff(ys) < 0):
                raise DomainError("table values must be non-decreasing from 0 to 1")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistortionFn):
            return NotImplemented
        return self.spec == other.spec

    def __hash__(self) -> int:
        return hash(self.spec)

    def __call__(self, z: ArrayLike) -> ArrayLike:
        return evaluate(self, z)

    @property
    def jump_levels(self) -> tuple[float, ...]:
        if self.kind is DistortionKind.VAR:
            return (1.0 - self.alpha,)
        if self.kind is DistortionKind.DISC:
            return DISC_JUMPS
        return ()

    @property
    def kink_levels(self) -> tuple[float, ...]:
        if self.kind is DistortionKind.CVAR and self.alpha > 0.0:
            return (1.0 - self.alpha,)
        if self.kind is DistortionKind.TABLE:
            slopes = self.slopes
            interior = np.nonzero(slopes[1:] != slopes[:-1])[0] + 1
            return tuple(float(x) for x in self.knots_x[interior])
        return ()

    @property
    def slopes(self) -> np.ndarray:
        if self.kind is not DistortionKind.TABLE:
            raise NonDifferentiableError("segment slopes exist for piecewise-linear tables only")
        return np.diff(self.knots_y) / np.diff(self.knots_x)

    def left_slope(self, z: ArrayLike) -> ArrayLike:
        zs = np.asarray(z, dtype=float)
        j = np.clip(np.searchsorted(self.knots_x, zs, side="left"), 1, len(self.knots_x) - 1)
        return _out(z, self.slopes[j - 1])

    @property
    def spec(self) -> str:
        if self.label:
            return self.label
        if self.kind is DistortionKind.TABLE:
            pairs = ",".join(f"{x!r}/{y!r}" for x, y in zip(self.knots_x, self.knots_y))
            return f"table:{pairs}"
        return f"{self.kind.value}:{self.alpha!r}"

    @property
    def is_smooth(self) -> bool:
        return not self.jump_levels and not self.kink_levels


def piecewise_linear(xs, ys, label: Optional[str] = None) -> DistortionFn:
    return DistortionFn(
        kind=DistortionKind.TABLE,
        knots_x=_frozen(xs),
        knots_y=_frozen(ys),
        label=label,
    )


def identity() -> DistortionFn:
    return piecewise_linear([0.0, 1.0], [0.0, 1.0], label="mean")


def parse_distortion(text: str) -> DistortionFn:
    """Parse ``cvar:0.7``, ``wang:-0.85``, ``sshape:5``, ``cpt:0.7``, ``disc:5``,
    ``var:0.7``, ``mean`` or ``table:0/0,0.3/1,1/1``."""
    raw = text.strip().lower()
    if raw == "mean":
        return identity()
    name, sep, arg = raw.partition(":")
    if not sep:
        raise DomainError(f"distortion must look like 'kind:parameter', got {text!r}")
    try:
        kind = DistortionKind(name)
    except ValueError:
        raise DomainError(f"unknown distortion kind {name!r}") from None
    if kind is DistortionKind.TABLE:
        try:
            pairs = [tuple(float(v) for v in item.split("/")) for item in arg.split(",")]
        except ValueError:
            raise DomainError(f"bad table knots {arg!r}") from None
        xs, ys = zip(*pairs)
        return piecewise_linear(xs, ys)
    try:
        alpha = float(arg)
    except ValueError:
        raise DomainError(f"bad distortion parameter {arg!r}") from None
    return DistortionFn(kind=kind, alpha=alpha)


def _sshape(z: np.ndarray, a: float) -> np.ndarray:
    return np.expm1(2.0 * a * z) / (np.expm1(a) * (np.exp(2.0 * a * z - a) + 1.0))


def _sshape_prime(z: np.ndarray, a: float) -> np.ndarray:
    big = np.exp(2.0 * a * z)
    return 2.0 * a * big * (1.0 + np.exp(-a)) / (np.expm1(a) * (big * np.exp(-a) + 1.0) ** 2)


def _raw_values(w: DistortionFn, z: np.ndarray) -> np.ndarray:
    a = w.alpha
    kind = w.kind
    if kind is DistortionKind.VAR:
        return (z > 1.0 - a).astype(float)
    if kind is DistortionKind.CVAR:
        return np.minimum(z / (1.0 - a), 1.0)
    if kind is DistortionKind.WANG:
        with np.errstate(divide="ignore", invalid="ignore"):
            return norm.cdf(norm.ppf(z) - a)
    if kind is DistortionKind.SSHAPE:
        return _sshape(z, a)
    if kind is DistortionKind.CPT:
        za = z ** a
        return za / (za + (1.0 - z) ** a) ** (1.0 / a)
    if kind is DistortionKind.DISC:
        steps = sum((z > c).astype(float) for c in DISC_JUMPS)
        return 0.8 * _sshape(z, a) + steps / 15.0
    return np.interp(z, w.knots_x, w.knots_y)


def evaluate(w: DistortionFn, z: ArrayLike) -> ArrayLike:
    zs = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(zs)) or np.any(zs < 0.0) or np.any(zs > 1.0):
        raise DomainError("distortion argument must lie in [0, 1]")
    values = _raw_values(w, zs)
    values = np.where(zs == 0.0, 0.0, np.where(zs == 1.0, 1.0, values))
    return _out(z, values)


def derivative(w: DistortionFn, z: ArrayLike) -> ArrayLike:
    zs = np.asarray(z, dtype=float)
    if np.any(zs <= 0.0) or np.any(zs >= 1.0):
        raise DomainError("derivative is evaluated on the open interval (0, 1)")
    if w.kind is DistortionKind.VAR:
        raise NonDifferentiableError("VaR distortion has no usable derivative")
    if w.jump_levels and np.any(np.isin(zs, w.jump_levels)):
        raise NonDifferentiableError(f"{w.spec} jumps at {w.jump_levels}")

    a = w.alpha
    kind = w.kind
    if kind is DistortionKind.CVAR:
        # left derivative at the kink
        values = np.where(zs <= 1.0 - a, 1.0 / (1.0 - a), 0.0)
    elif kind is DistortionKind.WANG:
        x = norm.ppf(zs)
        values = np.exp(a * x - 0.5 * a * a)
    elif kind is DistortionKind.SSHAPE:
        values = _sshape_prime(zs, a)
    elif kind is DistortionKind.CPT:
        za = zs ** a
        zb = (1.0 - zs) ** a
        total = za + zb
        value = za / total ** (1.0 / a)
        values = value * (a / zs - (za / zs - zb / (1.0 - zs)) / total)
    elif kind is DistortionKind.DISC:
        values = 0.8 * _sshape_prime(zs, a)
    else:
        values = np.asarray(w.left_slope(zs), dtype=float)
    return _out(z, values)


@dataclass(frozen=True, eq=False)
class Grid:
    levels: np.ndarray
    eval_points: np.ndarray

    def __post_init__(self):
        lv = self.levels
        if lv.ndim != 1 or lv.size < 1:
            raise DomainError("grid needs at least one level")
        if np.any(lv <= 0.0) or np.any(lv >= 1.0):
            raise DomainError("grid levels must lie in the open interval (0, 1)")
        if np.any(np.diff(lv) <= 0.0):
            raise DomainError("grid levels must be strictly increasing")
        if self.eval_points.shape != (lv.size - 1,):
            raise DomainError("one evaluation point per grid interval is required")

    @property
    def size(self) -> int:
        """Number of intervals N."""
        return self.levels.size - 1

    @classmethod
    def from_levels(cls, levels) -> "Grid":
        lv = np.asarray(levels, dtype=float)
        mids = 0.5 * (lv[1:] + lv[:-1])
        return cls(levels=_frozen(lv), eval_points=_frozen(mids))


def uniform_grid(n: int) -> Grid:
    if n < 1:
        raise DomainError(f"uniform grid needs N >= 1, got {n}")
    return Grid.from_levels((np.arange(n + 1) + 1.0) / (n + 2.0))


def sqrt_grid(m: int) -> Grid:
    if m < 2:
        raise DomainError(f"square-root grid needs M >= 2, got {m}")
    return Grid.from_levels(np.sqrt(np.arange(1, m) / m))


def weights(w: DistortionFn, g: Grid) -> np.ndarray:
    reflected = np.asarray(evaluate(w, 1.0 - g.levels), dtype=float)
    return np.diff(reflected)


def jump_partition(w: DistortionFn, g: Grid) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split the interval indices 1..N into those holding a jump of ``w~`` and the rest.

    Interval i holds the jump of ``w`` at c when ``1 - z_i <= c < 1 - z_{i-1}``, the
    same comparison that puts the jump inside ``weights(w, g)[i - 1]``.
    """
    upper = 1.0 - g.levels
    jumps: set[int] = set()
    for c in w.jump_levels:
        hit = np.nonzero((upper[1:] <= c) & (c < upper[:-1]))[0]
        jumps.update(int(i) + 1 for i in hit)
    smooth = tuple(i for i in range(1, g.size + 1) if i not in jumps)
    return tuple(sorted(jumps)), smooth


def _upper_hull(xs: np.ndarray, ys: np.ndarray) -> tuple[list[float], list[float]]:
    hx: list[float] = []
    hy: list[float] = []
    for x, y in zip(xs.tolist(), ys.tolist()):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2])
            if cross >= 0.0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
    return hx, hy


def concave_envelope(w: DistortionFn, resolution: int = 100_000) -> DistortionFn:
    """Least concave majorant of ``w`` as the upper hull of its sampled graph.

    Jump and kink locations are added to the sample so piecewise-linear distortions
    come out exact; at a jump the right limit is used since the majorant must
    dominate it.
    """
    if resolution < 2:
        raise DomainError(f"envelope resolution must be >= 2, got {resolution}")
    xs = np.arange(resolution + 1) / resolution
    extra_x = list(w.kink_levels)
    extra_x += list(w.jump_levels)
    extra_x += [float(np.nextafter(c, 1.0)) for c in w.jump_levels]
    if w.kind is DistortionKind.TABLE:
        extra_x += w.knots_x.tolist()
    xs = np.concatenate([xs, np.asarray(extra_x, dtype=float)])
    ys = np.asarray(evaluate(w, xs), dtype=float)
    for c in w.jump_levels:
        ys[xs == c] = evaluate(w, float(np.nextafter(c, 1.0)))

    order = np.lexsort((-ys, xs))
    xs, ys = xs[order], ys[order]
    keep = np.concatenate([[True], np.diff(xs) > 0.0])
    hx, hy = _upper_hull(xs[keep], ys[keep])
    logger.debug("concave envelope of %s has %d knots", w.spec, len(hx))
    return piecewise_linear(hx, hy, label=None)
