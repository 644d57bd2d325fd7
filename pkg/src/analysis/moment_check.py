"""
Kolmogorov-Chentsov Moment-Ratio Check

For a set of paths Y and an exponent field a_t, tabulates

    ratio(t, h) = mean over paths of |Y_{t+h} - Y_t|^p / h^(p a_t)

with a_t read per path at the left index t. If the moment condition holds
with exponent a, the ratios stay bounded as h -> 0; a negative trend of
max_t ratio(t, h) in h shows the exponent was over-claimed.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from simulation.core import GridError, SampledPath
from simulation.hurst import HurstPath
from simulation.moving_average import PathSample

from .reports import MIN_PATHS, KcCheckReport

logger = logging.getLogger(__name__)

# Slope of log max-ratio against log h above which the ratios count as bounded
SLOPE_THRESHOLD = -0.1

ExponentField = Union[float, HurstPath, Sequence[HurstPath], None]


def _from_paths(paths: Sequence[SampledPath]) -> Tuple[np.ndarray, Callable[[float], int], np.ndarray]:
    grid = paths[0].grid
    if any(path.grid != grid for path in paths):
        raise GridError("all paths must share one grid")
    return np.array([path.values for path in paths]), grid.node_index, None


def _from_sample(sample: PathSample) -> Tuple[np.ndarray, Callable[[float], int], np.ndarray]:
    return sample.values, sample.column, sample.hurst


def _exponents(
    exponent_field: ExponentField,
    n_paths: int,
    times: np.ndarray,
    columns: np.ndarray,
    realized: Optional[np.ndarray]
) -> np.ndarray:
    """Exponent a_t per (path, t)."""
    if exponent_field is None:
        if realized is None:
            raise ValueError("exponent_field is required unless paths is a PathSample")
        return realized[:, columns]
    if isinstance(exponent_field, (int, float)):
        return np.full((n_paths, times.size), float(exponent_field))
    fields = [exponent_field] * n_paths if isinstance(exponent_field, HurstPath) else list(exponent_field)
    if len(fields) != n_paths:
        raise ValueError(f"{len(fields)} exponent fields for {n_paths} paths")
    return np.array([field.at(times) for field in fields])


def kc_moment_check(
    paths: Union[Sequence[SampledPath], PathSample],
    exponent_field: ExponentField,
    p: float,
    t_grid: Sequence[float],
    h_grid: Sequence[float]
) -> KcCheckReport:
    """
    Empirical moment ratios over a (t, h) table.

    Args:
        paths: SampledPaths on a common grid, or a PathSample holding every
            t and t + h node
        exponent_field: a constant, one HurstPath shared by all paths, one
            per path, or None to use the realized Hurst values of a PathSample
        p: moment order, > 0
        t_grid: left times, grid nodes
        h_grid: increments, multiples of the grid step, at least two values

    Returns:
        KcCheckReport; verdict 'bounded' when the log-log slope of the
        max-over-t ratio against h exceeds SLOPE_THRESHOLD
    """
    if isinstance(paths, PathSample):
        values, column, realized = _from_sample(paths)
        grid = paths.grid
    else:
        if not paths:
            raise ValueError("kc_moment_check needs at least one path")
        values, column, realized = _from_paths(paths)
        grid = paths[0].grid
    if not p > 0.0:
        raise ValueError(f"p must be positive, got {p}")
    if len(h_grid) < 2:
        raise ValueError("h_grid needs at least two increments")
    n_paths = values.shape[0]
    if n_paths < MIN_PATHS:
        logger.warning("only %d paths; the moment-ratio verdict needs %d and will fail", n_paths, MIN_PATHS)

    times = np.array([grid.node(grid.node_index(t)) for t in t_grid])
    t_cols = np.array([column(t) for t in times])
    exponents = _exponents(exponent_field, n_paths, times, t_cols, realized)  # (paths, t)

    ratios = np.empty((len(t_grid), len(h_grid)))
    for j, h in enumerate(h_grid):
        lag_cols = np.array([column(t + h) for t in times])
        increments = np.abs(values[:, lag_cols] - values[:, t_cols])
        ratios[:, j] = np.mean(increments ** p / h ** (p * exponents), axis=0)

    fit = stats.linregress(np.log(h_grid), np.log(ratios.max(axis=0)))
    verdict = 'bounded' if fit.slope > SLOPE_THRESHOLD else 'unbounded_trend'
    logger.info("moment check p=%s: slope %.3f -> %s", p, fit.slope, verdict)
    return KcCheckReport(
        p=float(p),
        exponent_range=(float(exponents.min()), float(exponents.max())),
        t_values=[float(t) for t in t_grid],
        h_values=[float(h) for h in h_grid],
        ratios=ratios,
        slope=float(fit.slope),
        verdict=verdict,
        n_paths=n_paths,
        slope_threshold=SLOPE_THRESHOLD
    )
