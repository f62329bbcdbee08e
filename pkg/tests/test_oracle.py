import math

import numpy as np
import pytest
from scipy.stats import norm

from src.errors import DegenerateOracleError, DomainError
from src.risk import WorstCaseQuantile, drm_value, identity, parse_distortion, uniform_grid, wasserstein2, worst_case_quantile
from src.rng import make_rng


def test_cvar_worst_case_two_point_law():
    w = parse_distortion("cvar:0.7")
    assert worst_case_quantile(w, 0.9) == pytest.approx(math.sqrt(7 / 3), abs=1e-9)
    assert worst_case_quantile(w, 0.2) == pytest.approx(-math.sqrt(3 / 7), abs=1e-9)
    z = np.array([0.05, 0.5, 0.69, 0.71, 0.99])
    np.testing.assert_allclose(
        worst_case_quantile(w, z), np.where(z < 0.7, -math.sqrt(3 / 7), math.sqrt(7 / 3)), atol=1e-9,
    )


def test_worst_case_moments():
    for spec in ["cvar:0.7", "sshape:5", "wang:-0.85", "disc:5"]:
        mean, second = WorstCaseQuantile.build(parse_distortion(spec)).moments()
        assert mean == pytest.approx(0.0, abs=1e-6)
        assert second == pytest.approx(1.0, abs=1e-5)


def test_worst_case_quadrature_moments():
    oracle = WorstCaseQuantile.build(parse_distortion("cvar:0.7"))
    # 0.7 sits on a cell boundary so the midpoint rule is exact here
    z = (np.arange(100_000) + 0.5) / 100_000
    values = oracle(z)
    assert values.mean() == pytest.approx(0.0, abs=1e-6)
    assert np.mean(values ** 2) == pytest.approx(1.0, abs=1e-5)


def test_identity_is_degenerate():
    with pytest.raises(DegenerateOracleError):
        WorstCaseQuantile.build(identity())


def test_worst_case_rejects_boundary_levels():
    oracle = WorstCaseQuantile.build(parse_distortion("cvar:0.7"))
    with pytest.raises(DomainError):
        oracle(0.0)
    with pytest.raises(DomainError):
        oracle(np.array([0.5, 1.0]))


def test_drm_of_standard_normal():
    grid = uniform_grid(10_000)
    assert drm_value(norm.ppf, identity(), grid) == pytest.approx(0.0, abs=1e-3)
    cvar = drm_value(norm.ppf, parse_distortion("cvar:0.7"), grid)
    assert cvar == pytest.approx(norm.pdf(norm.ppf(0.7)) / 0.3, abs=2e-3)
    assert cvar == pytest.approx(1.1588, abs=2e-3)


@pytest.mark.parametrize("spec", ["cvar:0.7", "wang:-0.85", "disc:5", "var:0.7", "mean"])
def test_drm_of_constant_is_constant(spec):
    value = drm_value(lambda z: np.full(np.shape(z), 1.7), parse_distortion(spec), uniform_grid(20))
    assert value == pytest.approx(1.7, abs=1e-12)


def test_drm_of_worst_case_exceeds_normal():
    w = parse_distortion("cvar:0.7")
    grid = uniform_grid(10_000)
    oracle = WorstCaseQuantile.build(w)
    # the extreme two-point law maximizes the DRM among mean-0 variance-1 laws
    assert drm_value(oracle, w, grid) > drm_value(norm.ppf, w, grid)
    assert drm_value(oracle, w, grid) == pytest.approx(math.sqrt(7 / 3), abs=2e-3)


def test_wasserstein2():
    assert wasserstein2(norm.ppf, norm.ppf) == 0.0
    assert wasserstein2(norm.ppf, lambda z: norm.ppf(z) + 0.3) == pytest.approx(0.3)
    oracle = WorstCaseQuantile.build(parse_distortion("cvar:0.7"))
    distance = wasserstein2(norm.ppf, oracle)
    assert 0.0 < distance < 1.0
    assert distance == pytest.approx(wasserstein2(norm.ppf, oracle, 100_000), abs=5e-3)
    with pytest.raises(DomainError):
        wasserstein2(norm.ppf, norm.ppf, 1)


@pytest.mark.parametrize("spec", ["mean", "cvar:0.7", "wang:-0.85", "sshape:5", "disc:5", "cpt:0.7"])
def test_drm_is_monotone_under_dominance(spec):
    w = parse_distortion(spec)
    grid = uniform_grid(99)
    rng = make_rng(31)
    for _ in range(10):
        shift, slope = rng.uniform(0.0, 1.0, size=2)
        lower = drm_value(norm.ppf, w, grid)
        upper = drm_value(lambda z: norm.ppf(z) + shift + slope * z, w, grid)
        assert lower <= upper


def test_wasserstein2_triangle_inequality():
    rng = make_rng(32)
    for _ in range(50):
        (m1, m2, m3), (s1, s2, s3) = rng.normal(size=3), rng.uniform(0.2, 3.0, size=3)
        q1 = lambda z, m=m1, s=s1: m + s * norm.ppf(z)
        q2 = lambda z, m=m2, s=s2: m + s * norm.ppf(z)
        q3 = lambda z, m=m3, s=s3: m + s * norm.ppf(z)
        assert wasserstein2(q1, q3) <= wasserstein2(q1, q2) + wasserstein2(q2, q3) + 1e-9


def test_wasserstein2_normal_to_cvar_extreme_law():
    # squared distance 2 - 2 phi(Phi^-1(0.7)) (sqrt(7/3) + sqrt(3/7)), less the 1e6-point tail error
    oracle = WorstCaseQuantile.build(parse_distortion("cvar:0.7"))
    assert wasserstein2(norm.ppf, oracle, 1_000_000) == pytest.approx(0.694654, abs=2e-5)
