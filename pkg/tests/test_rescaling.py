import logging

import numpy as np
import pytest

from analysis.rescaling import limit_marginal_cdf, rescaling_test
from simulation.core import GridError, UniformGrid
from simulation.distributions import FiniteMixture, PointMass, UniformDistribution
from simulation.hurst import HurstSpec
from simulation.kernels import create_kernel_spec
from simulation.moving_average import SimConfig

PAIRS = [(1.0, 1.0), (1.0, -1.0), (2.0, 1.0)]
H_VALUES = [2 ** -4, 2 ** -5, 2 ** -6, 2 ** -7]


@pytest.fixture
def brownian_setup():
    kernel = create_kernel_spec('ito_mbm', 1.0, 0.5, 0.5)
    cfg = SimConfig(grid=UniformGrid(0.0, 1.0, 64), substeps=2, seed=13, horizon=1.0)
    return kernel, HurstSpec.constant(0.5), cfg


def test_limit_cdf_is_symmetric():
    for h_dist in (PointMass(0.5), FiniteMixture([0.4, 0.6])):
        cdf = limit_marginal_cdf(h_dist, 1.0, 1.0)
        assert cdf(0.0) == pytest.approx(0.5)
        assert cdf(-3.0) + cdf(3.0) == pytest.approx(1.0)
        assert cdf(50.0) == pytest.approx(1.0)


def test_limit_cdf_scales_with_sigma_and_r():
    base = limit_marginal_cdf(PointMass(0.5), 1.0, 1.0)
    wider = limit_marginal_cdf(PointMass(0.5), 2.0, 4.0)
    # sd sigma |r|^H = 4
    assert wider(4.0) == pytest.approx(base(1.0))


def test_limit_cdf_for_continuous_law():
    cdf = limit_marginal_cdf(UniformDistribution(0.3, 0.7), 1.0, 1.0)
    values = cdf(np.array([-1.0, 0.0, 1.0]))
    assert values.shape == (3,)
    assert np.all(np.diff(values) > 0)


def test_brownian_rescaled_covariances(brownian_setup):
    kernel, spec, cfg = brownian_setup
    report = rescaling_test(kernel, spec, cfg, 0.5, [0.125, 0.0625, 0.03125], PAIRS, n_paths=2000)
    # A(1/2) = 1: limits are min-type covariances of Brownian motion
    assert report.limit_cov == pytest.approx([1.0, 0.0, 1.0])
    assert report.finest_within_tolerance()
    assert report.passed
    assert max(report.ks_distance) < 0.05
    assert report.empirical_cov.shape == (3, 3)


@pytest.mark.slow
@pytest.mark.parametrize('h', [0.3, 0.7])
def test_constant_hurst_rescaled_covariances(h):
    kernel = create_kernel_spec('ito_mbm', 1.0, h, h)
    cfg = SimConfig(grid=UniformGrid(0.0, 1.0, 2048), substeps=8, seed=29)
    report = rescaling_test(kernel, HurstSpec.constant(h), cfg, 0.5, H_VALUES, PAIRS, n_paths=2000)
    assert report.finest_within_tolerance()
    assert report.error_non_increasing()
    assert report.passed


@pytest.mark.slow
def test_rough_hurst_rescaled_covariances_settle():
    spec = HurstSpec.tanh_of_fbm(0.9, 0.05, 0.2)
    kernel = create_kernel_spec('ito_mbm', 1.0, *spec.bounds())
    cfg = SimConfig(grid=UniformGrid(0.0, 1.0, 1024), substeps=2, seed=31)
    report = rescaling_test(kernel, spec, cfg, 0.5, H_VALUES, PAIRS, n_paths=1000)
    assert np.all(np.isfinite(report.empirical_cov))
    assert np.all(report.limit_cov[[0, 2]] > 0.0)
    assert report.error_non_increasing()


def test_small_runs_do_not_pass(brownian_setup, caplog):
    kernel, spec, cfg = brownian_setup
    with caplog.at_level(logging.WARNING, logger='analysis.rescaling'):
        report = rescaling_test(kernel, spec, cfg, 0.5, [0.125, 0.0625], PAIRS, n_paths=200)
    assert 'will fail' in caplog.text
    assert not report.passed


def test_report_rows(brownian_setup):
    kernel, spec, cfg = brownian_setup
    report = rescaling_test(kernel, spec, cfg, 0.5, [0.125, 0.0625], PAIRS, n_paths=50)
    rows = report.to_rows()
    assert len(rows) == 6
    assert rows[0][:3] == [0.125, 1.0, 1.0]
    summary = report.to_dict()
    assert summary['n_paths'] == 50
    assert len(summary['max_abs_err']) == 2


def test_h_values_must_decrease(brownian_setup):
    kernel, spec, cfg = brownian_setup
    with pytest.raises(ValueError):
        rescaling_test(kernel, spec, cfg, 0.5, [0.0625, 0.125], PAIRS, n_paths=10)


def test_needs_pairs(brownian_setup):
    kernel, spec, cfg = brownian_setup
    with pytest.raises(ValueError):
        rescaling_test(kernel, spec, cfg, 0.5, [0.125], [], n_paths=10)


def test_offsets_must_stay_on_grid(brownian_setup):
    kernel, spec, cfg = brownian_setup
    with pytest.raises(GridError):
        rescaling_test(kernel, spec, cfg, 0.5, [0.5], PAIRS, n_paths=10)
    with pytest.raises(GridError):
        rescaling_test(kernel, spec, cfg, 0.5, [0.01], PAIRS, n_paths=10)
