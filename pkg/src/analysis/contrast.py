"""
Field mBm vs Itô-mBm Contrast Checks

Paired simulations from one driver W:

- fig2_contrast: Hölder estimates of B^H and K^H for a rough Hurst path
- discontinuity_check: increments next to a Hurst jump under refinement
- stationary_covariance_check: constant-per-path random H against the
  stationary covariance and increment autocovariance closed forms
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from simulation.core import SampledPath, UniformGrid
from simulation.distributions import Distribution, FiniteMixture
from simulation.gaussian import increment_autocov, stationary_cov
from simulation.hurst import HurstSpec, generate_hurst
from simulation.kernels import create_kernel_spec
from simulation.moving_average import (
    SimConfig, driver_grid, mbm_field_values, moving_average_values, simulate_paths
)
from simulation.parallel import map_paths

from .holder import holder_profile
from .reports import ContrastReport, DiscontinuityReport, StationaryReport

logger = logging.getLogger(__name__)

FIG2_HURST = {'center': 0.9, 'amplitude': 0.05, 'driver_hurst': 0.2}
FIG2_POINTS = (0.2, 0.35, 0.5, 0.65, 0.8)
FIG2_SETUP = {
    'n_cells': 4096,
    't_max': 1.0,
    'substeps': 2,
    'horizon': None,
    'window': 0.03125,
    'n_scales': 7,
}
FIELD_BAND = (0.1, 0.35)
MOVING_BAND = (0.78, 1.0)
CONTROL_BAND = (0.8, 1.0)


def fig2_contrast(
    n_paths: int = 20,
    seed: int = 0,
    hurst_spec: Optional[HurstSpec] = None,
    points: Sequence[float] = FIG2_POINTS,
    threads: Optional[int] = None,
    **setup
) -> ContrastReport:
    """
    Hölder estimates of the field mBm and the Itô-mBm along the same driver.

    Args:
        n_paths: number of driver streams (0 .. n_paths - 1)
        seed: master seed
        hurst_spec: Hurst spec; default tanh_of_fbm(0.9, 0.05, 0.2). A
            constant spec runs the control, where both processes agree in law
        points: times at which the exponent is estimated
        threads: worker threads
        **setup: overrides of FIG2_SETUP

    Returns:
        ContrastReport with per-path estimates and the expected bands
    """
    options = dict(FIG2_SETUP, **setup)
    hurst_spec = hurst_spec or HurstSpec.tanh_of_fbm(**FIG2_HURST)
    control = hurst_spec.variant == 'constant'
    h_lower, h_upper = hurst_spec.bounds()
    kernel = create_kernel_spec('ito_mbm', 1.0, h_lower, h_upper)
    grid = UniformGrid(0.0, options['t_max'], options['n_cells'])
    cfg = SimConfig(grid=grid, substeps=options['substeps'], seed=seed, horizon=options['horizon'])
    driver = driver_grid(cfg, kernel)

    def one_path(stream_id: int) -> Tuple[list, list]:
        hurst = generate_hurst(hurst_spec, driver.grid, seed, stream_id, driver.far_left_ends)
        path_cfg = cfg.with_stream(stream_id)
        noise = driver.noise(seed, stream_id)
        field = SampledPath(grid, mbm_field_values(kernel, hurst, path_cfg, None, driver, noise))
        moving = SampledPath(grid, moving_average_values(kernel, hurst, path_cfg, None, driver, noise))
        estimates = []
        for path in (field, moving):
            profile = holder_profile(path, points, options['n_scales'], options['window'])
            estimates.append([e.alpha_hat for e in profile])
        return estimates[0], estimates[1]

    results = map_paths(one_path, list(range(n_paths)), threads)
    report = ContrastReport(
        points=list(points),
        alpha_field=np.array([f for f, _ in results]),
        alpha_moving=np.array([m for _, m in results]),
        field_band=CONTROL_BAND if control else FIELD_BAND,
        moving_band=CONTROL_BAND if control else MOVING_BAND,
        label='fig2-control' if control else 'fig2'
    )
    logger.info("contrast medians: mbm %.3f, ito-mbm %.3f", report.median_field, report.median_moving)
    return report


def _adjacent_increments(values: np.ndarray) -> np.ndarray:
    """Largest of the two increments around the middle column, per path."""
    return np.maximum(np.abs(values[:, 1] - values[:, 0]), np.abs(values[:, 2] - values[:, 1]))


def discontinuity_check(
    hurst_levels: Tuple[float, float] = (0.3, 0.7),
    breakpoint: float = 0.5,
    refinements: Sequence[int] = (64, 256, 1024),
    n_paths: int = 100,
    seed: int = 0,
    substeps: int = 4,
    horizon: Optional[float] = None,
    threads: Optional[int] = None
) -> DiscontinuityReport:
    """
    Continuity canary at a Hurst jump.

    For each refinement the Itô-mBm K^H and the field B^H are simulated at
    the breakpoint node and its two neighbours; K^H increments must shrink
    with the grid step while B^H keeps an O(1) jump.
    """
    spec = HurstSpec.step(list(hurst_levels), [breakpoint])
    kernel = create_kernel_spec('ito_mbm', 1.0, min(hurst_levels), max(hurst_levels))
    moving_medians = []
    field_medians = []
    for n_cells in refinements:
        grid = UniformGrid(0.0, 1.0, int(n_cells))
        k = grid.node_index(breakpoint)
        nodes = [k - 1, k, k + 1]
        cfg = SimConfig(grid=grid, substeps=substeps, seed=seed, horizon=horizon)
        moving = simulate_paths(kernel, spec, cfg, n_paths, 'moving_average', threads, nodes)
        field = simulate_paths(kernel, spec, cfg, n_paths, 'mbm_field', threads, nodes)
        moving_medians.append(float(np.median(_adjacent_increments(moving.values))))
        field_medians.append(float(np.median(_adjacent_increments(field.values))))
        logger.info("n=%d: ito-mbm %.4f, mbm %.4f", n_cells, moving_medians[-1], field_medians[-1])
    return DiscontinuityReport(
        levels=tuple(hurst_levels),
        breakpoint=breakpoint,
        refinements=[int(n) for n in refinements],
        moving_medians=moving_medians,
        field_medians=field_medians,
        n_paths=n_paths
    )


def stationary_covariance_check(
    h_dist: Optional[Distribution] = None,
    pairs: Sequence[Tuple[float, float]] = ((1.0, 1.0), (1.0, 2.0)),
    deltas: Sequence[int] = (0, 1, 2),
    n_paths: int = 2000,
    seed: int = 0,
    t_max: float = 3.0,
    n_cells: int = 48,
    substeps: int = 4,
    horizon: Optional[float] = None,
    threads: Optional[int] = None
) -> StationaryReport:
    """
    Itô-mBm with one random H per path against the stationary closed forms.

    Covariances at the given (t, s) pairs and the unit-increment
    autocovariance at the given lags are estimated over n_paths paths.
    """
    h_dist = h_dist or FiniteMixture([0.4, 0.6], [0.5, 0.5])
    spec = HurstSpec.stationary_constant_per_path(h_dist)
    low, high = h_dist.support()
    kernel = create_kernel_spec('ito_mbm', 1.0, low, high)
    grid = UniformGrid(0.0, t_max, n_cells)
    cfg = SimConfig(grid=grid, substeps=substeps, seed=seed, horizon=horizon)
    times = sorted({float(x) for pair in pairs for x in pair}
                   | {float(d) for d in deltas} | {float(d) + 1.0 for d in deltas} | {0.0, 1.0})
    nodes = [grid.node_index(x) for x in times]
    sample = simulate_paths(kernel, spec, cfg, n_paths, 'moving_average', threads, nodes)

    def column(x):
        return sample.values[:, times.index(float(x))]

    labels, empirical, stderr, exact = [], [], [], []

    def record(label, products, value):
        labels.append(label)
        empirical.append(float(products.mean()))
        stderr.append(float(products.std(ddof=1) / np.sqrt(n_paths)))
        exact.append(float(value))

    for t, s in pairs:
        record(f"cov({t},{s})", column(t) * column(s), stationary_cov(t, s, h_dist))
    base = column(1.0) - column(0.0)
    for d in deltas:
        lagged = column(d + 1.0) - column(d)
        record(f"gamma({d})", base * lagged, increment_autocov(int(d), h_dist))
    return StationaryReport(labels=labels, empirical=empirical, stderr=stderr, exact=exact, n_paths=n_paths)
