import numpy as np
import pytest

from analysis.contrast import (
    FIELD_BAND, MOVING_BAND, discontinuity_check, fig2_contrast, stationary_covariance_check
)
from analysis.reports import ContrastReport, DiscontinuityReport, StationaryReport
from simulation.distributions import FiniteMixture
from simulation.hurst import HurstSpec

SMALL_SETUP = {'n_cells': 512, 'substeps': 1, 'window': 0.125, 'n_scales': 4}


def test_control_run_gives_identical_estimates():
    report = fig2_contrast(n_paths=2, seed=1, hurst_spec=HurstSpec.constant(0.9), threads=1, **SMALL_SETUP)
    assert report.label == 'fig2-control'
    assert report.alpha_field.shape == (2, 5)
    # with a constant exponent the field and the moving average share every value
    assert np.array_equal(report.alpha_field, report.alpha_moving)
    assert len(report.to_rows()) == 10


def test_rough_hurst_run_shapes():
    report = fig2_contrast(n_paths=2, seed=1, threads=1, **SMALL_SETUP)
    assert report.label == 'fig2'
    assert report.field_band == (0.1, 0.35)
    assert np.all((report.alpha_moving >= 0.0) & (report.alpha_moving <= 1.5))
    assert set(report.to_dict()) >= {'median_alpha_mbm', 'median_alpha_ito_mbm', 'passed'}


@pytest.mark.slow
def test_fig2_bands():
    report = fig2_contrast(n_paths=20, seed=0)
    assert FIELD_BAND[0] < report.median_field < FIELD_BAND[1]
    assert MOVING_BAND[0] < report.median_moving < MOVING_BAND[1]
    assert report.passed


def test_discontinuity_canary():
    report = discontinuity_check(refinements=(32, 128, 512), n_paths=200, seed=4, substeps=2)
    assert report.moving_decreasing()
    assert report.field_medians[-1] > 0.1
    assert report.passed
    assert [row[0] for row in report.to_rows()] == [32, 128, 512]


def test_discontinuity_report_verdicts():
    report = DiscontinuityReport(levels=(0.3, 0.7), breakpoint=0.5, refinements=[64, 256],
                                 moving_medians=[0.2, 0.25], field_medians=[0.5, 0.5], n_paths=10)
    assert not report.moving_decreasing()
    assert report.field_jumps()
    assert not report.passed


def test_stationary_closed_forms():
    report = stationary_covariance_check(FiniteMixture([0.4, 0.6]), n_paths=1000, seed=5,
                                         n_cells=24, substeps=8)
    assert report.labels == ['cov(1.0,1.0)', 'cov(1.0,2.0)', 'gamma(0)', 'gamma(1)', 'gamma(2)']
    for empirical, stderr, exact in zip(report.empirical, report.stderr, report.exact):
        assert abs(empirical - exact) <= 3.0 * stderr
    assert report.passed
    assert report.to_dict()['n_paths'] == 1000


def test_stationary_report_verdict():
    report = StationaryReport(labels=['a', 'b'], empirical=[1.0, 0.5], stderr=[0.1, 0.1],
                              exact=[1.05, 0.9], n_paths=100)
    assert not report.passed
    assert report.to_rows()[1][4] == pytest.approx(0.4)


def test_contrast_report_bands():
    report = ContrastReport(points=[0.5], alpha_field=np.array([[0.2], [0.3]]),
                            alpha_moving=np.array([[0.9], [0.85]]),
                            field_band=(0.1, 0.35), moving_band=(0.78, 1.0))
    assert report.median_field == pytest.approx(0.25)
    assert report.passed
