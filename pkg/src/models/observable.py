import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.stats import norm

from ..errors import DimensionMismatchError, DomainError


logger = logging.getLogger(__name__)

FD_STEP = 1e-6


@dataclass(frozen=True)
class ModelSample:
    """A batch of draws: raw inputs ``x``, observables ``y = L(x)`` and the score
    ``grad_theta ln f_X(x; theta)`` at the sampling parameter, one row per draw."""

    x: np.ndarray
    y: np.ndarray
    score: np.ndarray

    def __post_init__(self):
        if self.y.ndim != 1 or self.score.ndim != 2 or self.score.shape[0] != self.y.shape[0]:
            raise DimensionMismatchError(
                f"sample shapes disagree: y {self.y.shape}, score {self.score.shape}"
            )

    @property
    def size(self) -> int:
        return self.y.shape[0]

    def __getitem__(self, index) -> "ModelSample":
        idx = np.atleast_1d(np.arange(self.size)[index])
        return ModelSample(x=self.x[idx], y=self.y[idx], score=self.score[idx])


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def cube(cls, dim: int, half_width: float) -> "Box":
        return cls(lower=np.full(dim, -half_width), upper=np.full(dim, half_width))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, theta: np.ndarray) -> bool:
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def uniform(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


class ObservableModel(ABC):
    """A parametric simulation ``Y(theta) = L(X(theta))`` whose evaluation map does
    not depend on theta, so the score of ``X`` is all the gradient machinery needs."""

    name: str = "model"

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def sample(self, theta: np.ndarray, rng: np.random.Generator, size: int = 1) -> ModelSample:
        ...

    @abstractmethod
    def log_density(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def score(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def cdf(self, theta: np.ndarray, y: Union[float, np.ndarray]) -> np.ndarray:
        ...

    def score_fd(self, theta: np.ndarray, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """Central finite differences of ``log_density`` in every coordinate of theta."""
        theta = np.asarray(theta, dtype=float)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((xs.size, theta.size))
        for j in range(theta.size):
            step = np.zeros_like(theta)
            step[j] = h
            out[:, j] = (self.log_density(theta + step, xs) - self.log_density(theta - step, xs)) / (2 * h)
        return out

    def cdf_grad(self, theta: np.ndarray, y: float, h: float = FD_STEP) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.empty(theta.size)
        for j in range(theta.size):
            step = np.zeros_like(theta)
            step[j] = h
            out[j] = (float(self.cdf(theta + step, y)) - float(self.cdf(theta - step, y))) / (2 * h)
        return out

    def quantile(self, theta: np.ndarray, z: Union[float, np.ndarray], tol: float = 1e-12) -> Union[float, np.ndarray]:
        """Vectorized bisection on ``cdf`` until ``|F(q) - z| <= tol``."""
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(zs <= 0.0) or np.any(zs >= 1.0):
            raise DomainError("quantile levels must lie in (0, 1)")
        lo, hi = self._bracket(theta)
        lo = np.full(zs.shape, lo)
        hi = np.full(zs.shape, hi)
        mid = 0.5 * (lo + hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f = self.cdf(theta, mid)
            if np.all(np.abs(f - zs) <= tol) or np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
                break
            below = f < zs
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return float(mid[0]) if np.ndim(z) == 0 else mid

    def quantile_fn(self, theta: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        theta = np.array(theta, dtype=float)
        return lambda z: self.quantile(theta, z)

    @abstractmethod
    def _bracket(self, theta: np.ndarray) -> tuple[float, float]:
        ...

    def check_theta(self, theta: np.ndarray, box: Box) -> None:
        if np.shape(theta) != (self.dim,):
            raise DimensionMismatchError(f"{self.name} expects {self.dim} parameters, got {np.shape(theta)}")
        if not box.contains(theta):
            raise DomainError(f"theta outside the feasible box for {self.name}")


class GaussLocation(ObservableModel):
    """``Y = m(theta) + Z`` with ``m(theta) = theta - curvature * theta^2 / 2``.

    With zero curvature this is the plain location family (quantile gradient 1);
    a positive curvature gives the mean an interior maximum at ``1 / curvature``.
    """

    name = "gauss-location"

    def __init__(self, curvature: float = 0.0):
        self.curvature = float(curvature)

    @property
    def dim(self) -> int:
        return 1

    def mean(self, theta: np.ndarray) -> float:
        t = float(np.asarray(theta).reshape(-1)[0])
        return t - 0.5 * self.curvature * t * t

    def mean_grad(self, theta: np.ndarray) -> float:
        t = float(np.asarray(theta).reshape(-1)[0])
        return 1.0 - self.curvature * t

    def sample(self, theta: np.ndarray, rng: np.random.Generator, size: int = 1) -> ModelSample:
        x = self.mean(theta) + rng.standard_normal(size)
        return ModelSample(x=x, y=x.copy(), score=self.score(theta, x))

    def log_density(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        return norm.logpdf(np.asarray(x, dtype=float) - self.mean(theta))

    def score(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return ((xs - self.mean(theta)) * self.mean_grad(theta))[:, None]

    def cdf(self, theta: np.ndarray, y: Union[float, np.ndarray]) -> np.ndarray:
        return norm.cdf(np.asarray(y, dtype=float) - self.mean(theta))

    def cdf_grad(self, theta: np.ndarray, y: float, h: float = FD_STEP) -> np.ndarray:
        return np.array([-norm.pdf(y - self.mean(theta)) * self.mean_grad(theta)])

    def quantile(self, theta: np.ndarray, z: Union[float, np.ndarray], tol: float = 1e-12) -> Union[float, np.ndarray]:
        zs = np.asarray(z, dtype=float)
        if np.any(zs <= 0.0) or np.any(zs >= 1.0):
            raise DomainError("quantile levels must lie in (0, 1)")
        values = self.mean(theta) + norm.ppf(zs)
        return float(values) if np.ndim(z) == 0 else values

    def _bracket(self, theta: np.ndarray) -> tuple[float, float]:
        m = self.mean(theta)
        return m - 40.0, m + 40.0
