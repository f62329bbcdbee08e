"""Benchmarks: the stand-alone quantile and quantile-gradient trackers at a fixed
parameter, and the per-iteration cost of the tracker optimizers."""

import logging
from dataclasses import replace
from typing import Iterable

import numba
import numpy as np
import pandas as pd

from ..models import GaussianMixtureModel
from ..risk import parse_distortion, uniform_grid
from ..rng import make_rng
from ..sa import Algorithm, SAConfig, run
from ..sa.optimizer import WARMUP_DRAWS
from ..sa.schedules import portfolio_schedules
from .experiment import ExperimentConfig


logger = logging.getLogger(__name__)

FD_STEP = 1e-5
TIMED_ALGORITHMS = (Algorithm.DM, Algorithm.QF, Algorithm.HYBRID)


@numba.njit(cache=True)
def _track(y, score, z, q0, a_q, beta, a_d, alpha, a_h, eta, k0, log_every):
    n = y.shape[0]
    logged = n // log_every + 1
    q_log = np.empty(logged)
    d_log = np.empty(logged)
    q = q0
    d = 0.0
    q_log[0] = q
    d_log[0] = d
    j = 1
    for k in range(n):
        base = max(k0 + k, 1)
        gamma_q = a_q / base ** beta
        gamma_d = a_d / base ** alpha
        h = a_h / base ** eta
        hit = 1.0 if y[k] <= q else 0.0
        u = (y[k] - q) / h
        density = np.exp(-0.5 * u * u) / (np.sqrt(2.0 * np.pi) * h)
        d = d + gamma_d * (-hit * score[k] - density * d)
        q = q + gamma_q * (z - hit)
        if (k + 1) % log_every == 0:
            q_log[j] = q
            d_log[j] = d
            j += 1
    return q_log, d_log


def track_quantile(cfg: ExperimentConfig, seed: int) -> pd.DataFrame:
    """Run the quantile tracker and its gradient tracker at the fixed ``theta0``.

    Returns one row per logged k with the estimates and their squared errors against
    the model's exact quantile and quantile derivative.
    """
    model = cfg.model_obj()
    theta = np.array(cfg.theta0 if cfg.theta0 is not None else (0.0,), dtype=float)
    rng = make_rng(seed)
    warm = model.sample(theta, rng, WARMUP_DRAWS)
    q0 = float(np.quantile(warm.y, cfg.level))
    draws = model.sample(theta, rng, cfg.iterations)
    sched = cfg.schedules()
    q_log, d_log = _track(
        draws.y.astype(float), draws.score[:, 0].astype(float), cfg.level, q0,
        sched.q.a, sched.q.exponent, sched.D.a, sched.D.exponent, sched.h.a, sched.h.exponent,
        sched.q.k0, cfg.log_every,
    )
    true_q = float(model.quantile(theta, cfg.level))
    true_d = float(
        (model.quantile(theta + FD_STEP, cfg.level) - model.quantile(theta - FD_STEP, cfg.level)) / (2.0 * FD_STEP)
    )
    k = np.arange(q_log.size, dtype=np.int64) * cfg.log_every
    logger.debug("tracker seed=%d final q=%.5f (true %.5f), D=%.5f (true %.5f)", seed, q_log[-1], true_q, d_log[-1], true_d)
    return pd.DataFrame({
        "k": k,
        "q": q_log,
        "D": d_log,
        "sq_error": (q_log - true_q) ** 2,
        "grad_error": (d_log - true_d) ** 2,
    })


def time_algorithms(
    grid_sizes: Iterable[int] = (49, 99, 199),
    components: Iterable[int] = (5, 10),
    iterations: int = 2000,
    distortion: str = "cvar:0.7",
    seed: int = 0,
) -> pd.DataFrame:
    """Mean wall-clock milliseconds per iteration for every algorithm, grid size and
    mixture size."""
    w = parse_distortion(distortion)
    schedules = portfolio_schedules(w.kind.value)
    rows = []
    for d in components:
        model = GaussianMixtureModel(components=d)
        for n in grid_sizes:
            base = SAConfig(
                algorithm=Algorithm.DM, grid=uniform_grid(n), distortion=w, schedules=schedules,
                box=model.default_box(), batch_size=4, total_iterations=iterations, seed=seed,
                log_every=max(iterations, 1),
            )
            for algorithm in TIMED_ALGORITHMS:
                history = run(replace(base, algorithm=algorithm), model)
                ms = history.final.ms / max(iterations, 1)
                rows.append({"algorithm": algorithm.value, "N": n, "d": d, "params": model.dim, "ms_per_iter": ms})
                logger.info("%s N=%d d=%d: %.4f ms per iteration", algorithm.value, n, d, ms)
    return pd.DataFrame(rows, columns=["algorithm", "N", "d", "params", "ms_per_iter"])
