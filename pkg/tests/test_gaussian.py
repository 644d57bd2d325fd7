import math

import numpy as np
import pytest
from scipy import integrate

from simulation.core import GridError, RemovableSingularityError, UniformGrid
from simulation.distributions import FiniteMixture, PointMass, UniformDistribution
from simulation.gaussian import (
    CovarianceTable, exact_fbm, fbm_cov, fbm_cov_matrix, fgn_autocov, increment_autocov,
    local_cov_limit, mbm_cov, mbm_cov_terms, mbm_field_cov_quadrature, norm_const_A,
    stationary_cov
)

HURST_LEVELS = [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]


def test_norm_const_at_brownian_point():
    assert abs(norm_const_A(0.5) - 1.0) < 1e-12


def test_norm_const_known_values():
    assert norm_const_A(0.75) == pytest.approx(0.874020, abs=1e-5)
    assert norm_const_A(0.7) == pytest.approx(0.838891, abs=1e-5)


@pytest.mark.parametrize('h', HURST_LEVELS)
def test_d_factor_matches_norm_const(h):
    terms = mbm_cov_terms(h, h)
    assert abs(terms.d_factor * math.cos(math.pi * h) - norm_const_A(h) / 2.0) < 1e-10


def test_norm_const_rejects_out_of_range():
    with pytest.raises(ValueError):
        norm_const_A(1.0)
    with pytest.raises(ValueError):
        norm_const_A(0.0)


def test_fbm_cov_brownian():
    assert fbm_cov(1.0, 2.0, 0.5) == 1.0
    assert fbm_cov(3.0, 3.0, 0.5, normalization='standard') == pytest.approx(3.0)


def test_fbm_cov_normalizations():
    ratio = fbm_cov(1.0, 2.0, 0.3) / fbm_cov(1.0, 2.0, 0.3, normalization='standard')
    assert ratio == pytest.approx(norm_const_A(0.3))
    with pytest.raises(ValueError):
        fbm_cov(1.0, 2.0, 0.3, normalization='unit')


def test_fbm_cov_matrix_is_positive_definite():
    times = np.linspace(0.1, 1.0, 10)
    matrix = fbm_cov_matrix(times, 0.7)
    assert np.allclose(matrix, matrix.T)
    assert np.linalg.eigvalsh(matrix).min() > 0.0
    assert matrix[2, 5] == pytest.approx(fbm_cov(times[2], times[5], 0.7))


@pytest.mark.parametrize('h', HURST_LEVELS)
def test_mbm_cov_reduces_to_fbm(h):
    for t, s in [(1.0, 2.0), (0.3, 0.7), (-1.0, 2.0), (2.0, 2.0)]:
        assert abs(mbm_cov(t, s, h, h) - fbm_cov(t, s, h)) < 1e-10


def test_mbm_cov_vanishes_at_origin():
    assert abs(mbm_cov(1.0, 0.0, 0.3, 0.8)) < 1e-12


def test_mbm_cov_singularity_guard():
    with pytest.raises(RemovableSingularityError):
        mbm_cov(1.0, 2.0, 0.4, 0.6)
    assert math.isinf(mbm_cov_terms(0.4, 0.6).d_factor)


def test_mbm_cov_limit_at_brownian_point():
    assert mbm_cov(1.0, 2.0, 0.5, 0.5, allow_limit=True) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize('t,s,h_t,h_s', [(1.0, 2.0, 0.4, 0.7), (2.0, 1.0, 0.4, 0.7), (0.5, 1.5, 0.2, 0.3)])
def test_mbm_cov_agrees_with_quadrature(t, s, h_t, h_s):
    closed = mbm_cov(t, s, h_t, h_s)
    oracle = mbm_field_cov_quadrature(t, s, h_t, h_s)
    assert closed == pytest.approx(oracle, rel=1e-5, abs=1e-8)


def test_mbm_cov_limit_agrees_with_quadrature():
    closed = mbm_cov(1.0, 1.0, 0.4, 0.6, allow_limit=True)
    oracle = mbm_field_cov_quadrature(1.0, 1.0, 0.4, 0.6)
    assert closed == pytest.approx(oracle, rel=1e-4)


def test_fgn_autocov():
    gamma = fgn_autocov(np.arange(4), 0.5)
    assert np.allclose(gamma, [1.0, 0.0, 0.0, 0.0])
    assert fgn_autocov(0, 0.7, step=0.25) == pytest.approx(0.25 ** 1.4)


def test_exact_fbm_starts_at_zero_and_is_deterministic(unit_grid):
    first = exact_fbm(0.7, unit_grid, seed=5)
    second = exact_fbm(0.7, unit_grid, seed=5)
    assert first.values[0] == 0.0
    assert np.array_equal(first.values, second.values)
    assert not np.array_equal(first.values, exact_fbm(0.7, unit_grid, seed=5, stream_id=1).values)


def test_exact_fbm_kernel_normalization(unit_grid):
    standard = exact_fbm(0.3, unit_grid, seed=2)
    scaled = exact_fbm(0.3, unit_grid, seed=2, normalization='kernel')
    assert np.allclose(scaled.values, standard.values * math.sqrt(norm_const_A(0.3)))


def test_exact_fbm_needs_grid_at_zero():
    with pytest.raises(GridError):
        exact_fbm(0.5, UniformGrid(1.0, 2.0, 8), seed=0)


def test_exact_fbm_single_cell():
    path = exact_fbm(0.7, UniformGrid(0.0, 1.0, 1), seed=0)
    assert path.values.shape == (2,)


@pytest.mark.parametrize('h', [0.3, 0.7])
def test_exact_fbm_covariance(h):
    grid = UniformGrid(0.0, 1.0, 32)
    paths = np.array([exact_fbm(h, grid, seed=11, stream_id=p).values for p in range(3000)])
    for i, j in [(32, 32), (16, 32), (8, 24)]:
        products = paths[:, i] * paths[:, j]
        stderr = products.std(ddof=1) / math.sqrt(products.size)
        exact = fbm_cov(grid.node(i), grid.node(j), h, normalization='standard')
        assert abs(products.mean() - exact) < 4.0 * stderr


def test_stationary_cov_point_mass_is_fbm():
    assert stationary_cov(1.0, 2.0, 0.5) == pytest.approx(1.0)
    assert stationary_cov(1.0, 2.0, PointMass(0.7)) == pytest.approx(fbm_cov(1.0, 2.0, 0.7))


def test_stationary_cov_mixture_is_weighted_sum():
    mixture = FiniteMixture([0.4, 0.6], [0.5, 0.5])
    expected = 0.5 * fbm_cov(1.0, 2.0, 0.4) + 0.5 * fbm_cov(1.0, 2.0, 0.6)
    assert stationary_cov(1.0, 2.0, mixture) == pytest.approx(expected)


def test_stationary_cov_scales_with_sigma():
    assert stationary_cov(1.0, 1.0, 0.3, sigma_dist=2.0) == pytest.approx(4.0 * norm_const_A(0.3))


def test_increment_autocov_brownian():
    assert increment_autocov(1, 0.5) == 0.0
    assert increment_autocov(0, 0.5) == pytest.approx(1.0)


def test_increment_autocov_by_polarization():
    mixture = FiniteMixture([0.4, 0.6], [0.5, 0.5])
    for d in (1, 2, 3):
        expected = stationary_cov(d + 1.0, 1.0, mixture) - stationary_cov(float(d), 1.0, mixture)
        assert increment_autocov(d, mixture) == pytest.approx(expected)


def test_increment_autocov_rejects_fractional_lag():
    with pytest.raises(ValueError):
        increment_autocov(1.5, 0.5)


def test_local_cov_limit_diagonal():
    assert local_cov_limit(2.0, 2.0, PointMass(0.3)) == pytest.approx(norm_const_A(0.3) * 2.0 ** 0.6)


def test_local_cov_limit_monte_carlo_for_continuous_law():
    expected, _ = integrate.quad(norm_const_A, 0.3, 0.7)
    value = local_cov_limit(1.0, 1.0, UniformDistribution(0.3, 0.7), seed=3)
    assert value == pytest.approx(expected / 0.4, rel=1e-2)


def test_expectation_rejects_bad_support():
    with pytest.raises(ValueError):
        stationary_cov(1.0, 1.0, FiniteMixture([0.5, 1.0]))


def test_covariance_table_rows():
    table = CovarianceTable([(1.0, 2.0), (2.0, 2.0)], [1.0, 2.0], 'fbm')
    assert table.to_rows() == [[1.0, 2.0, 1.0, 'fbm'], [2.0, 2.0, 2.0, 'fbm']]
    with pytest.raises(ValueError):
        CovarianceTable([(1.0, 2.0)], [], 'fbm')
