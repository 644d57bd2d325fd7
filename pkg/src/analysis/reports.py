"""
Report Types for Statistical Verification

Structured outputs of the analysis checks. Every report carries a `passed`
verdict, `to_dict()` for the JSON summary and `to_rows()` (with a matching
HEADER) for the CSV table.
"""

from dataclasses import dataclass
from typing import Dict, Any, List, Tuple

import numpy as np

# Standard errors allowed between a Monte Carlo estimate and its exact value
SE_TOLERANCE = 3.0
# Slack, in standard errors, for the non-increasing error check over h
MONOTONE_SLACK = 2.0
# Fewest Monte Carlo paths a rescaling or moment-ratio verdict accepts
MIN_PATHS = 1000


@dataclass
class HolderEstimate:
    """Pointwise Hölder exponent estimate at time t."""
    t: float
    alpha_hat: float
    scales_used: List[float]
    stderr: float
    window: float
    clamped: bool = False

    HEADER = ['t', 'alpha_hat', 'stderr', 'window', 'n_scales']

    def to_rows(self) -> List[List[Any]]:
        return [[self.t, self.alpha_hat, self.stderr, self.window, len(self.scales_used)]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'alpha_hat': self.alpha_hat,
            'stderr': self.stderr,
            'window': self.window,
            'scales_used': list(self.scales_used),
            'clamped': self.clamped
        }


@dataclass
class HolderSummary:
    """Hölder estimates over many paths against the realized Hurst values."""
    points: List[float]
    alpha: np.ndarray           # (n_paths, len(points))
    realized: np.ndarray        # same shape, H_t of each path
    tolerance: float = 0.07

    HEADER = ['t', 'median_alpha_hat', 'median_hurst', 'median_bias']

    @property
    def bias(self) -> List[float]:
        return np.median(self.alpha - self.realized, axis=0).tolist()

    @property
    def passed(self) -> bool:
        return all(abs(b) <= self.tolerance for b in self.bias)

    def to_rows(self) -> List[List[Any]]:
        alpha = np.median(self.alpha, axis=0)
        hurst = np.median(self.realized, axis=0)
        return [[t, float(a), float(h), b] for t, a, h, b in zip(self.points, alpha, hurst, self.bias)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'points': list(self.points),
            'median_bias': self.bias,
            'tolerance': self.tolerance,
            'n_paths': int(self.alpha.shape[0]),
            'passed': self.passed
        }


@dataclass
class KcCheckReport:
    """Moment ratios E|Y_{t+h} - Y_t|^p / h^(p a_t) over a (t, h) table."""
    p: float
    exponent_range: Tuple[float, float]
    t_values: List[float]
    h_values: List[float]
    ratios: np.ndarray
    slope: float
    verdict: str
    n_paths: int
    slope_threshold: float = -0.1
    min_paths: int = MIN_PATHS

    HEADER = ['t', 'h', 'ratio']

    @property
    def passed(self) -> bool:
        return self.verdict == 'bounded' and self.n_paths >= self.min_paths

    def max_over_t(self) -> np.ndarray:
        return self.ratios.max(axis=0)

    def to_rows(self) -> List[List[Any]]:
        return [
            [t, h, float(self.ratios[i, j])]
            for i, t in enumerate(self.t_values)
            for j, h in enumerate(self.h_values)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p': self.p,
            'verdict': self.verdict,
            'slope': self.slope,
            'slope_threshold': self.slope_threshold,
            'n_paths': self.n_paths,
            'min_paths': self.min_paths,
            'exponent_range': list(self.exponent_range),
            'max_ratio_by_h': dict(zip(map(str, self.h_values), self.max_over_t().tolist())),
            'passed': self.passed
        }


@dataclass
class RescalingReport:
    """Empirical vs limiting covariance of the rescaled increments at time t."""
    t: float
    h_values: List[float]
    pairs: List[Tuple[float, float]]
    empirical_cov: np.ndarray   # (len(h_values), len(pairs))
    stderr: np.ndarray          # same shape
    limit_cov: np.ndarray       # (len(pairs),)
    ks_distance: List[float]
    n_paths: int
    min_paths: int = MIN_PATHS

    HEADER = ['h', 'r', 'v', 'empirical', 'stderr', 'limit', 'abs_err']

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.empirical_cov - self.limit_cov[None, :])

    @property
    def max_abs_err(self) -> List[float]:
        return self.abs_err.max(axis=1).tolist()

    def finest_within_tolerance(self) -> bool:
        finest = int(np.argmin(self.h_values))
        return bool(np.all(self.abs_err[finest] <= SE_TOLERANCE * self.stderr[finest] + 1e-12))

    def error_non_increasing(self) -> bool:
        order = np.argsort(self.h_values)[::-1]
        errors = self.abs_err.max(axis=1)[order]
        slack = MONOTONE_SLACK * self.stderr.max(axis=1)[order]
        return bool(np.all(errors[1:] <= errors[:-1] + slack[1:] + slack[:-1]))

    @property
    def passed(self) -> bool:
        return (self.n_paths >= self.min_paths and self.finest_within_tolerance()
                and self.error_non_increasing())

    def to_rows(self) -> List[List[Any]]:
        rows = []
        for i, h in enumerate(self.h_values):
            for j, (r, v) in enumerate(self.pairs):
                rows.append([h, r, v, float(self.empirical_cov[i, j]), float(self.stderr[i, j]),
                             float(self.limit_cov[j]), float(self.abs_err[i, j])])
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'h_values': list(self.h_values),
            'pairs': [list(pair) for pair in self.pairs],
            'limit_cov': self.limit_cov.tolist(),
            'max_abs_err': self.max_abs_err,
            'ks_distance': list(self.ks_distance),
            'n_paths': self.n_paths,
            'min_paths': self.min_paths,
            'finest_within_tolerance': self.finest_within_tolerance(),
            'error_non_increasing': self.error_non_increasing(),
            'passed': self.passed
        }


@dataclass
class ContrastReport:
    """Hölder estimates of the field mBm against the moving average, path by path."""
    points: List[float]
    alpha_field: np.ndarray     # (n_paths, len(points))
    alpha_moving: np.ndarray    # (n_paths, len(points))
    field_band: Tuple[float, float]
    moving_band: Tuple[float, float]
    label: str = 'fig2'

    HEADER = ['path', 't', 'alpha_mbm', 'alpha_ito_mbm']

    @property
    def median_field(self) -> float:
        return float(np.median(self.alpha_field))

    @property
    def median_moving(self) -> float:
        return float(np.median(self.alpha_moving))

    @property
    def passed(self) -> bool:
        low, high = self.field_band
        in_field = low < self.median_field < high
        low, high = self.moving_band
        return in_field and low < self.median_moving < high

    def to_rows(self) -> List[List[Any]]:
        return [
            [p, t, float(self.alpha_field[p, i]), float(self.alpha_moving[p, i])]
            for p in range(self.alpha_field.shape[0])
            for i, t in enumerate(self.points)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'label': self.label,
            'points': list(self.points),
            'median_alpha_mbm': self.median_field,
            'median_alpha_ito_mbm': self.median_moving,
            'band_mbm': list(self.field_band),
            'band_ito_mbm': list(self.moving_band),
            'n_paths': int(self.alpha_field.shape[0]),
            'passed': self.passed
        }


@dataclass
class DiscontinuityReport:
    """Largest increment next to a Hurst jump, per refinement level."""
    levels: Tuple[float, float]
    breakpoint: float
    refinements: List[int]
    moving_medians: List[float]
    field_medians: List[float]
    n_paths: int
    min_jump: float = 0.1
    jump_ratio: float = 1.5

    HEADER = ['n_cells', 'median_ito_mbm_increment', 'median_mbm_jump']

    def moving_decreasing(self) -> bool:
        medians = self.moving_medians
        return all(b < a for a, b in zip(medians[:-1], medians[1:]))

    def field_jumps(self) -> bool:
        finest = self.field_medians[-1]
        return finest > self.min_jump and finest > self.jump_ratio * self.moving_medians[-1]

    @property
    def passed(self) -> bool:
        return self.moving_decreasing() and self.field_jumps()

    def to_rows(self) -> List[List[Any]]:
        return [[n, k, b] for n, k, b in zip(self.refinements, self.moving_medians, self.field_medians)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'levels': list(self.levels),
            'breakpoint': self.breakpoint,
            'refinements': list(self.refinements),
            'median_ito_mbm_increment': list(self.moving_medians),
            'median_mbm_jump': list(self.field_medians),
            'n_paths': self.n_paths,
            'moving_decreasing': self.moving_decreasing(),
            'field_jumps': self.field_jumps(),
            'passed': self.passed
        }


@dataclass
class StationaryReport:
    """Monte Carlo covariances against the stationary closed forms."""
    labels: List[str]
    empirical: List[float]
    stderr: List[float]
    exact: List[float]
    n_paths: int

    HEADER = ['quantity', 'empirical', 'stderr', 'exact', 'abs_err']

    @property
    def passed(self) -> bool:
        return all(abs(e - x) <= SE_TOLERANCE * s + 1e-12
                   for e, s, x in zip(self.empirical, self.stderr, self.exact))

    def to_rows(self) -> List[List[Any]]:
        return [[label, e, s, x, abs(e - x)]
                for label, e, s, x in zip(self.labels, self.empirical, self.stderr, self.exact)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rows': [dict(zip(self.HEADER, row)) for row in self.to_rows()],
            'n_paths': self.n_paths,
            'passed': self.passed
        }
