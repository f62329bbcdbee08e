"""Gaussian ordering policy: a two-layer tanh network over the observation window
with one mean head per echelon and a learnable log standard deviation.

Parameters live in one flat vector so the optimizers can treat the policy like any
other parametric model; forward and backward passes are written out by hand.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError
from ..models import Box


LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Layers:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    log_std: np.ndarray


@dataclass(frozen=True)
class PolicySpec:
    obs_dim: int
    act_dim: int
    hidden: int = 32
    # observations are divided by obs_scale; mean orders stay inside
    # order_offset +- order_range
    obs_scale: float = 20.0
    order_offset: float = 10.0
    order_range: float = 10.0
    init_log_std: float = math.log(3.0)
    weight_bound: float = 10.0

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        o, h, a = self.obs_dim, self.hidden, self.act_dim
        return [(o, h), (h,), (h, h), (h,), (h, a), (a,), (a,)]

    @property
    def size(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes)

    def unpack(self, theta: np.ndarray) -> Layers:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.size,):
            raise DimensionMismatchError(f"policy expects {self.size} parameters, got {theta.shape}")
        parts = []
        start = 0
        for shape in self.shapes:
            count = int(np.prod(shape))
            parts.append(theta[start:start + count].reshape(shape))
            start += count
        return Layers(*parts)

    def box(self) -> Box:
        lower = np.full(self.size, -self.weight_bound)
        upper = np.full(self.size, self.weight_bound)
        lower[-self.act_dim:] = LOG_STD_MIN
        upper[-self.act_dim:] = LOG_STD_MAX
        return Box(lower=lower, upper=upper)

    def init_theta(self, rng: np.random.Generator) -> np.ndarray:
        o, h, a = self.obs_dim, self.hidden, self.act_dim
        parts = [
            rng.normal(0.0, 1.0 / math.sqrt(o), size=o * h), np.zeros(h),
            rng.normal(0.0, 1.0 / math.sqrt(h), size=h * h), np.zeros(h),
            rng.normal(0.0, 0.1 / (self.order_range * math.sqrt(h)), size=h * a), np.zeros(a),
            np.full(a, self.init_log_std),
        ]
        return np.concatenate(parts)

    def _forward(self, layers: Layers, obs: np.ndarray):
        x = np.atleast_2d(obs) / self.obs_scale
        h1 = np.tanh(x @ layers.w1 + layers.b1)
        h2 = np.tanh(h1 @ layers.w2 + layers.b2)
        head = np.tanh(h2 @ layers.w3 + layers.b3)
        mean = self.order_offset + self.order_range * head
        log_std = np.clip(layers.log_std, LOG_STD_MIN, LOG_STD_MAX)
        return x, h1, h2, head, mean, log_std

    def mean(self, theta: np.ndarray, obs: np.ndarray) -> np.ndarray:
        return self._forward(self.unpack(theta), obs)[4]

    def act(self, theta: np.ndarray, obs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One raw Gaussian action for a single observation."""
        _, _, _, _, mean, log_std = self._forward(self.unpack(theta), obs)
        return mean[0] + np.exp(log_std) * rng.standard_normal(self.act_dim)

    def log_prob(self, theta: np.ndarray, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Per-step ``ln pi(a_t | s_t; theta)``."""
        _, _, _, _, mean, log_std = self._forward(self.unpack(theta), obs)
        u = (np.atleast_2d(actions) - mean) * np.exp(-log_std)
        return np.sum(-0.5 * u * u - log_std - HALF_LOG_2PI, axis=1)

    def log_prob_grad(self, theta: np.ndarray, obs: np.ndarray, actions: np.ndarray) -> tuple[float, np.ndarray]:
        """Total log-density of the action sequence and its gradient in theta."""
        layers = self.unpack(theta)
        x, h1, h2, head, mean, log_std = self._forward(layers, obs)
        inv_var = np.exp(-2.0 * log_std)
        diff = np.atleast_2d(actions) - mean
        u2 = diff * diff * inv_var
        total = float(np.sum(-0.5 * u2 - log_std - HALF_LOG_2PI))

        g_mean = diff * inv_var
        g_log_std = np.sum(u2 - 1.0, axis=0)
        g_log_std = np.where((layers.log_std < LOG_STD_MIN) | (layers.log_std > LOG_STD_MAX), 0.0, g_log_std)

        g_head = g_mean * self.order_range * (1.0 - head * head)
        g_w3 = h2.T @ g_head
        g_b3 = g_head.sum(axis=0)
        g_a2 = (g_head @ layers.w3.T) * (1.0 - h2 * h2)
        g_w2 = h1.T @ g_a2
        g_b2 = g_a2.sum(axis=0)
        g_a1 = (g_a2 @ layers.w2.T) * (1.0 - h1 * h1)
        g_w1 = x.T @ g_a1
        g_b1 = g_a1.sum(axis=0)
        grad = np.concatenate([
            g_w1.ravel(), g_b1, g_w2.ravel(), g_b2, g_w3.ravel(), g_b3, g_log_std,
        ])
        return total, grad
