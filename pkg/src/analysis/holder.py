"""
Pointwise Hölder Exponent Estimation

Log-regression of local mean absolute increments on dyadic scales
h_j = window * 2^-j, j = 1..n_scales, averaged over start points in
[t - window/2, t + window/2].
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from simulation.core import GridError, SampledPath
from simulation.hurst import HurstSpec
from simulation.kernels import KernelSpec
from simulation.moving_average import SimConfig, simulate_paths

from .reports import HolderEstimate, HolderSummary

logger = logging.getLogger(__name__)

ALPHA_MIN = 0.0
ALPHA_MAX = 1.5
MIN_SCALES = 3


def _lag_in_cells(h: float, step: float) -> int:
    cells = int(round(h / step))
    if cells < 1 or abs(cells * step - h) > 1e-6 * step:
        raise GridError(f"scale {h} is not a positive multiple of the grid step {step}")
    return cells


def estimate_holder(path: SampledPath, t: float, n_scales: int = 6, window: float = 0.125) -> HolderEstimate:
    """
    Estimate the pointwise Hölder exponent of a path at t.

    Args:
        path: sampled path
        t: time of interest, with [t - window/2, t + window] inside the grid
        n_scales: number of dyadic scales, at least 3
        window: width of the averaging window and twice the largest scale

    Returns:
        HolderEstimate with alpha_hat clamped to [0, 1.5]

    Raises:
        GridError: scales below the grid step or window outside the grid
    """
    if n_scales < MIN_SCALES:
        raise ValueError(f"n_scales must be at least {MIN_SCALES}, got {n_scales}")
    grid = path.grid
    if not window > 0.0:
        raise ValueError(f"window must be positive, got {window}")
    slack = 1e-9 * grid.step
    if t - 0.5 * window < grid.t_min - slack or t + window > grid.t_max + slack:
        raise GridError(f"window of {window} around t={t} leaves [{grid.t_min}, {grid.t_max}]")

    scales = [window * 2.0 ** -j for j in range(1, n_scales + 1)]
    if scales[-1] < grid.step * (1.0 - 1e-9):
        raise GridError(
            f"finest scale {scales[-1]} is below the grid step {grid.step}; "
            f"use fewer scales or a finer grid"
        )
    first = int(math.ceil((t - 0.5 * window - grid.t_min) / grid.step - 1e-9))
    last = int(math.floor((t + 0.5 * window - grid.t_min) / grid.step + 1e-9))
    values = path.values
    means = []
    for h in scales:
        lag = _lag_in_cells(h, grid.step)
        stop = min(last, grid.n_cells - lag)
        increments = values[first + lag:stop + lag + 1] - values[first:stop + 1]
        means.append(float(np.mean(np.abs(increments))))

    if min(means) <= 0.0:
        return HolderEstimate(t=t, alpha_hat=ALPHA_MAX, scales_used=scales, stderr=0.0,
                              window=window, clamped=True)
    fit = stats.linregress(np.log(scales), np.log(means))
    alpha = float(np.clip(fit.slope, ALPHA_MIN, ALPHA_MAX))
    logger.debug("holder estimate at t=%s: slope %.4f, stderr %.4f", t, fit.slope, fit.stderr)
    return HolderEstimate(t=t, alpha_hat=alpha, scales_used=scales, stderr=float(fit.stderr),
                          window=window, clamped=alpha != fit.slope)


def holder_profile(
    path: SampledPath,
    times: Sequence[float],
    n_scales: int = 6,
    window: float = 0.125
) -> List[HolderEstimate]:
    """estimate_holder at several times."""
    return [estimate_holder(path, t, n_scales, window) for t in times]


def holder_check(
    kernel: KernelSpec,
    hurst_spec: HurstSpec,
    cfg: SimConfig,
    points: Sequence[float],
    n_paths: int = 20,
    n_scales: int = 6,
    window: float = 0.125,
    tolerance: float = 0.07,
    threads: Optional[int] = None
) -> HolderSummary:
    """
    Estimated exponents of simulated moving-average paths against their own H_t.

    Paths are simulated on every output node; the check passes when the
    median of alpha_hat - H_t over paths is within tolerance at each point.
    """
    sample = simulate_paths(kernel, hurst_spec, cfg, n_paths, threads=threads)
    alpha = np.array([
        [e.alpha_hat for e in holder_profile(sample.path(p), points, n_scales, window)]
        for p in range(sample.n_paths)
    ])
    realized = sample.hurst[:, [sample.column(t) for t in points]]
    summary = HolderSummary(points=[float(t) for t in points], alpha=alpha, realized=realized,
                            tolerance=tolerance)
    logger.info("holder check: median bias %s", summary.bias)
    return summary
