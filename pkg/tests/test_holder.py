import numpy as np
import pytest

from analysis.holder import estimate_holder, holder_check, holder_profile
from analysis.reports import HolderSummary
from simulation.core import GridError, SampledPath, UniformGrid
from simulation.gaussian import exact_fbm
from simulation.hurst import HurstSpec
from simulation.kernels import create_kernel_spec
from simulation.moving_average import SimConfig, simulate_paths

POINTS = [0.25, 0.5, 0.75]


def test_linear_path_has_exponent_one(fine_grid):
    path = SampledPath(fine_grid, fine_grid.nodes())
    estimate = estimate_holder(path, 0.5, n_scales=5, window=0.125)
    assert estimate.alpha_hat == pytest.approx(1.0, abs=1e-9)
    assert not estimate.clamped
    assert len(estimate.scales_used) == 5
    assert estimate.scales_used[0] == 0.0625


def test_constant_path_is_clamped(fine_grid):
    path = SampledPath(fine_grid, np.zeros(fine_grid.n_nodes))
    estimate = estimate_holder(path, 0.5, n_scales=4)
    assert estimate.clamped
    assert estimate.alpha_hat == 1.5


@pytest.mark.parametrize('h', [0.3, 0.7])
def test_calibration_on_exact_fbm(h):
    grid = UniformGrid(0.0, 1.0, 2 ** 14)
    estimates = []
    for stream_id in range(100):
        path = exact_fbm(h, grid, seed=3, stream_id=stream_id)
        estimates.extend(e.alpha_hat for e in holder_profile(path, POINTS))
    assert abs(np.mean(estimates) - h) < 0.05
    assert abs(np.median(estimates) - h) < 0.05


def test_window_must_fit(fine_grid):
    path = SampledPath(fine_grid, fine_grid.nodes())
    with pytest.raises(GridError):
        estimate_holder(path, 0.95, window=0.125)
    with pytest.raises(GridError):
        estimate_holder(path, 0.02, window=0.125)


def test_scales_must_resolve_on_grid(unit_grid):
    path = SampledPath(unit_grid, unit_grid.nodes())
    # finest scale 0.125 / 64 is below the step 1/64
    with pytest.raises(GridError):
        estimate_holder(path, 0.5, n_scales=6, window=0.125)


def test_invalid_arguments(fine_grid):
    path = SampledPath(fine_grid, fine_grid.nodes())
    with pytest.raises(ValueError):
        estimate_holder(path, 0.5, n_scales=2)
    with pytest.raises(ValueError):
        estimate_holder(path, 0.5, window=0.0)


def test_holder_check_on_brownian_paths():
    grid = UniformGrid(0.0, 1.0, 1024)
    kernel = create_kernel_spec('ito_mbm', 1.0, 0.5, 0.5)
    cfg = SimConfig(grid=grid, substeps=1, seed=6, horizon=0.5)
    summary = holder_check(kernel, HurstSpec.constant(0.5), cfg, [0.5], n_paths=12,
                           n_scales=5, window=0.25, tolerance=0.1)
    assert summary.alpha.shape == (12, 1)
    assert np.all(summary.realized == 0.5)
    assert summary.passed
    assert summary.to_dict()['n_paths'] == 12
    assert len(summary.to_rows()) == 1


def test_holder_summary_verdict():
    summary = HolderSummary(points=[0.5, 0.75],
                            alpha=np.array([[0.52, 0.9], [0.48, 0.95], [0.5, 0.85]]),
                            realized=np.full((3, 2), 0.5))
    assert summary.bias == pytest.approx([0.0, 0.4])
    assert not summary.passed
    assert summary.to_rows()[0] == [0.5, 0.5, 0.5, pytest.approx(0.0)]


@pytest.mark.slow
def test_exponent_at_a_hurst_step_is_bounded_below():
    grid = UniformGrid(0.0, 1.0, 1024)
    kernel = create_kernel_spec('ito_mbm', 1.0, 0.3, 0.7)
    cfg = SimConfig(grid=grid, substeps=2, seed=12)
    sample = simulate_paths(kernel, HurstSpec.step([0.3, 0.7], [0.5]), cfg, n_paths=100)
    estimates = [estimate_holder(sample.path(p), 0.5).alpha_hat for p in range(sample.n_paths)]
    assert np.median(estimates) >= 0.3 - 0.1
