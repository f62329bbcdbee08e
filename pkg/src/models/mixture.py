"""Normalized Gaussian mixture used as the robust-portfolio decision variable.

Raw parameters are laid out in blocks ``(w_1..w_d, mu_1..mu_d, ln sigma_1..ln sigma_d)``.
Every finite raw vector maps onto a mixture with mean 0 and variance 1.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import logsumexp, softmax
from scipy.stats import norm

from ..errors import DimensionMismatchError
from .observable import Box, ModelSample, ObservableModel


logger = logging.getLogger(__name__)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
DEFAULT_HALF_WIDTH = 2.5


@dataclass(frozen=True)
class MixtureParams:
    raw: np.ndarray
    box: Box

    def __post_init__(self):
        if self.raw.ndim != 1 or self.raw.size % 3 != 0:
            raise DimensionMismatchError(f"mixture parameters come in triples, got shape {self.raw.shape}")
        if self.box.dim != self.raw.size:
            raise DimensionMismatchError("box dimension differs from the parameter vector")

    @property
    def components(self) -> int:
        return self.raw.size // 3

    @classmethod
    def default_box(cls, raw: np.ndarray) -> "MixtureParams":
        raw = np.asarray(raw, dtype=float)
        return cls(raw=raw, box=Box.cube(raw.size, DEFAULT_HALF_WIDTH))


@dataclass(frozen=True)
class NormalizedMixture:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.weights @ self.means)

    @property
    def variance(self) -> float:
        return float(self.weights @ (self.stds ** 2 + self.means ** 2)) - self.mean ** 2


def _split(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size % 3 != 0:
        raise DimensionMismatchError(f"mixture parameters come in triples, got shape {raw.shape}")
    d = raw.size // 3
    return raw[:d], raw[d:2 * d], raw[2 * d:]


def normalize_mixture(raw: Union[MixtureParams, np.ndarray]) -> NormalizedMixture:
    if isinstance(raw, MixtureParams):
        raw = raw.raw
    a, mu, log_sigma = _split(raw)
    w = softmax(a)
    sigma = np.exp(log_sigma)
    centered = mu - w @ mu
    scale = math.sqrt(float(w @ (sigma ** 2 + centered ** 2)))
    return NormalizedMixture(weights=w, means=centered / scale, stds=sigma / scale)


@dataclass(frozen=True)
class _Normalization:
    """Normalized components plus their Jacobians with respect to the raw vector."""

    mix: NormalizedMixture
    d_weights: np.ndarray
    d_means: np.ndarray
    d_stds: np.ndarray


def _normalization(raw: np.ndarray) -> _Normalization:
    a, mu, log_sigma = _split(raw)
    d = a.size
    w = softmax(a)
    sigma = np.exp(log_sigma)
    mu_mix = float(w @ mu)
    centered = mu - mu_mix
    var = float(w @ (sigma ** 2 + centered ** 2))
    s = math.sqrt(var)

    zeros = np.zeros((d, d))
    eye = np.eye(d)
    d_weights = np.hstack([np.diag(w) - np.outer(w, w), zeros, zeros])

    d_mu_mix = np.concatenate([w * centered, w, np.zeros(d)])
    second = sigma ** 2 + mu ** 2
    d_var = np.concatenate([
        w * (second - float(w @ second)) - 2.0 * mu_mix * w * centered,
        2.0 * w * centered,
        2.0 * w * sigma ** 2,
    ])
    d_s = d_var / (2.0 * s)

    d_centered = np.hstack([zeros, eye, zeros]) - d_mu_mix[None, :]
    d_means = d_centered / s - np.outer(centered, d_s) / var
    d_stds = np.hstack([zeros, zeros, np.diag(sigma)]) / s - np.outer(sigma, d_s) / var

    mix = NormalizedMixture(weights=w, means=centered / s, stds=sigma / s)
    return _Normalization(mix=mix, d_weights=d_weights, d_means=d_means, d_stds=d_stds)


def _component_logpdf(mix: NormalizedMixture, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = (xs[:, None] - mix.means[None, :]) / mix.stds[None, :]
    return u, -0.5 * u * u - np.log(mix.stds)[None, :] - HALF_LOG_2PI


class GaussianMixtureModel(ObservableModel):
    """``Y = X`` with ``X`` drawn from the normalized mixture of ``components`` Gaussians."""

    name = "mixture"

    def __init__(self, components: int = 10):
        if components < 1:
            raise DimensionMismatchError(f"mixture needs at least one component, got {components}")
        self.components = components

    @property
    def dim(self) -> int:
        return 3 * self.components

    def default_box(self) -> Box:
        return Box.cube(self.dim, DEFAULT_HALF_WIDTH)

    def _check(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise DimensionMismatchError(f"mixture:d={self.components} expects {self.dim} parameters, got {theta.shape}")
        return theta

    def normalized(self, theta: np.ndarray) -> NormalizedMixture:
        return normalize_mixture(self._check(theta))

    def sample(self, theta: np.ndarray, rng: np.random.Generator, size: int = 1) -> ModelSample:
        norm_ = _normalization(self._check(theta))
        mix = norm_.mix
        picks = np.searchsorted(np.cumsum(mix.weights), rng.random(size), side="right")
        picks = np.minimum(picks, self.components - 1)
        x = mix.means[picks] + mix.stds[picks] * rng.standard_normal(size)
        return ModelSample(x=x, y=x.copy(), score=self._score(norm_, x))

    def log_density(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        mix = self.normalized(theta)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        _, logpdf = _component_logpdf(mix, xs)
        return logsumexp(logpdf + np.log(mix.weights)[None, :], axis=1)

    def score(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self._score(_normalization(self._check(theta)), np.atleast_1d(np.asarray(x, dtype=float)))

    @staticmethod
    def _score(norm_: _Normalization, xs: np.ndarray) -> np.ndarray:
        mix = norm_.mix
        u, logpdf = _component_logpdf(mix, xs)
        joint = logpdf + np.log(mix.weights)[None, :]
        total = logsumexp(joint, axis=1, keepdims=True)
        resp = np.exp(joint - total)
        by_weight = np.exp(logpdf - total)
        by_mean = resp * u / mix.stds[None, :]
        by_std = resp * (u * u - 1.0) / mix.stds[None, :]
        return by_weight @ norm_.d_weights + by_mean @ norm_.d_means + by_std @ norm_.d_stds

    def cdf(self, theta: np.ndarray, y: Union[float, np.ndarray]) -> np.ndarray:
        mix = self.normalized(theta)
        ys = np.asarray(y, dtype=float)
        u = (ys[..., None] - mix.means) / mix.stds
        return norm.cdf(u) @ mix.weights

    def _bracket(self, theta: np.ndarray) -> tuple[float, float]:
        mix = self.normalized(theta)
        return float(np.min(mix.means - 40.0 * mix.stds)), float(np.max(mix.means + 40.0 * mix.stds))
