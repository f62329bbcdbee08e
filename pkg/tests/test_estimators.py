import math

import numpy as np
import pytest
from scipy.stats import norm

from src.errors import DimensionMismatchError, DomainError
from src.models import GaussLocation, ModelSample
from src.risk import uniform_grid
from src.rng import make_rng
from src.sa import KernelSpec, TrackerState, g1_score, g3_kernel, qgrad_step, quantile_step, sort_clip
from src.sa.estimators import g3_batch, indicators


PHI0 = 1.0 / math.sqrt(2.0 * math.pi)


def _sample(y, score):
    y = np.asarray(y, dtype=float)
    return ModelSample(x=y, y=y.copy(), score=np.atleast_2d(np.asarray(score, dtype=float)))


def test_g1_is_zero_above_threshold():
    sample = _sample([2.0], [[0.7, -1.0]])
    np.testing.assert_array_equal(g1_score(sample, 1.0), [0.0, 0.0])


def test_g1_averages_batch_and_levels():
    sample = _sample([0.0, 1.0], [[1.0], [3.0]])
    assert g1_score(sample, 0.5) == pytest.approx([-0.5])
    rows = g1_score(sample, np.array([0.5, 2.0]))
    np.testing.assert_allclose(rows, [[-0.5], [-2.0]])


def test_g1_monte_carlo_at_zero():
    model = GaussLocation()
    draws = model.sample(np.array([0.0]), make_rng(11), 1_000_000)
    assert g1_score(draws, 0.0)[0] == pytest.approx(PHI0, abs=3e-3)
    assert g1_score(draws, 50.0)[0] == pytest.approx(0.0, abs=3e-3)


def test_g1_unbiased_at_random_points():
    model = GaussLocation()
    rng = make_rng(12)
    for _ in range(10):
        theta = rng.uniform(-1.0, 1.0, size=1)
        q = float(rng.uniform(-1.5, 1.5))
        draws = model.sample(theta, rng, 1_000_000)
        per_draw = -(draws.y <= q).astype(float) * draws.score[:, 0]
        se = per_draw.std() / math.sqrt(draws.size)
        expected = -model.cdf_grad(theta, q)[0]
        assert abs(g1_score(draws, q)[0] - expected) <= 3.0 * se


@pytest.mark.parametrize("diff,h,expected", [(0.0, 1.0, PHI0), (0.5, 0.5, norm.pdf(1.0) / 0.5), (1.0, 1.0, 0.24197072451914337)])
def test_g3_values(diff, h, expected):
    assert g3_kernel(1.0 + diff, 1.0, h) == pytest.approx(expected)


def test_g3_rejects_bad_bandwidth_and_kernel():
    with pytest.raises(DomainError):
        g3_kernel(0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        KernelSpec("epanechnikov")


def test_g3_batch_means_over_draws():
    y = np.array([0.0, 1.0])
    expected = [np.mean(g3_kernel(y, 0.0, 0.5)), np.mean(g3_kernel(y, 1.0, 0.5))]
    np.testing.assert_allclose(g3_batch(y, np.array([0.0, 1.0]), 0.5), expected)


@pytest.mark.slow
def test_kernel_bias_and_variance_orders():
    y = make_rng(13).standard_normal(10_000_000)
    wide, narrow = g3_kernel(y, 0.0, 0.2), g3_kernel(y, 0.0, 0.1)
    bias_ratio = (wide.mean() - PHI0) / (narrow.mean() - PHI0)
    var_ratio = narrow.var() / wide.var()
    assert 3.0 <= bias_ratio <= 5.3
    assert 1.6 <= var_ratio <= 2.4


def test_quantile_step_examples():
    assert quantile_step(1.0, 0.7, 2.0, 0.1) == pytest.approx(1.07)
    assert quantile_step(1.0, 0.5, 0.5, 0.1) == pytest.approx(0.95)
    stepped = quantile_step(np.array([0.0, 1.0]), np.array([0.25, 0.75]), np.array([0.5, 2.0]), 0.2)
    np.testing.assert_allclose(stepped, [0.05, 1.05])
    assert quantile_step(1.0, 0.5, 0.5, 0.1, rho=2.0) == pytest.approx(0.85)


def test_qgrad_step_examples():
    D = np.array([[2.0, -1.0]])
    g3 = np.array([0.5])
    np.testing.assert_allclose(qgrad_step(D, 0.5 * D, g3, 0.3), D)
    np.testing.assert_allclose(qgrad_step(D, np.array([[1.0, 1.0]]), np.zeros(1), 0.1, rho=0.5), [[2.05, -0.95]])


def test_indicators_shape():
    ind = indicators(np.array([0.0, 2.0, 1.0]), np.array([0.5, 1.5]))
    np.testing.assert_array_equal(ind, [[1, 1], [0, 0], [0, 1]])


def test_sort_clip_examples():
    np.testing.assert_array_equal(sort_clip(np.array([-3.0, 0.0, 3.0]), uniform_grid(2), 0.1), [-3.0, 0.0, 3.0])
    np.testing.assert_allclose(sort_clip(np.array([1.0, 0.5]), uniform_grid(1), 0.1), [0.5, 1.0])
    np.testing.assert_allclose(sort_clip(np.zeros(3), uniform_grid(2), 0.2), [0.0, 0.05, 0.10])


@pytest.mark.parametrize("lipschitz", [0.0, 0.5, 3.0])
def test_sort_clip_is_idempotent(lipschitz):
    rng = make_rng(17)
    grid = uniform_grid(49)
    for _ in range(20):
        once = sort_clip(rng.normal(0.0, 2.0, grid.levels.size), grid, lipschitz)
        np.testing.assert_allclose(sort_clip(once, grid, lipschitz), once, rtol=0.0, atol=1e-12)


def test_sort_clip_errors():
    with pytest.raises(DomainError):
        sort_clip(np.zeros(3), uniform_grid(2), -1.0)
    with pytest.raises(DimensionMismatchError):
        sort_clip(np.zeros(4), uniform_grid(2))


def test_tracker_state_validation():
    state = TrackerState(q=np.zeros(3), D=np.zeros((2, 4)), d_rows=(1, 2))
    assert state.finite
    with pytest.raises(DimensionMismatchError):
        TrackerState(q=np.zeros(3), D=np.zeros((1, 4)), d_rows=(1, 2))
    assert not TrackerState(q=np.array([np.nan]), D=np.zeros((0, 1))).finite
