"""
Exact fBm Sampling and Closed-Form Covariances

Oracle sampler for fractional Brownian motion (circulant embedding of the
fractional Gaussian noise autocovariance, Cholesky fallback) and the
covariance formulas used to check every simulator:

- fBm covariance in the moving-average normalization, A(H)/2 (...)
- field mBm covariance B(t, H_t) vs B(s, H_s) with its removable singularity
- stationary Itô-mBm covariance and increment autocovariance
- local covariance limit of the rescaled increments

Two normalizations are explicit everywhere: 'standard' (Var B_1 = 1) and
'kernel' (Var B_1 = A(H), what the moving-average kernel produces).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Any, List, Tuple, Union

import numpy as np
import scipy.fft
import scipy.linalg
from scipy import integrate
from scipy.special import gammaln

from .core import (
    DOMAIN_EXPECTATION, DOMAIN_FBM, EmbeddingError, GridError, MultifracError,
    RemovableSingularityError, SampledPath, UniformGrid, rng_for
)
from .distributions import Distribution, as_distribution

logger = logging.getLogger(__name__)

NORMALIZATIONS = ('standard', 'kernel')

# Distance from h_mean = 1/2 below which mbm_cov refuses the direct formula
SINGULARITY_GUARD = 1e-6
# Symmetric offset used by the limit evaluation
LIMIT_OFFSET = 1e-4
# Relative size of negative circulant eigenvalues tolerated as round-off
EMBEDDING_TOL = 1e-10

DistributionLike = Union[float, Distribution]


def _check_hurst(h: float, name: str = 'h') -> float:
    if not (isinstance(h, (int, float, np.floating)) and 0.0 < h < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {h!r}")
    return float(h)


def _check_normalization(normalization: str) -> str:
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    return normalization


def _abs_pow(x, exponent):
    return np.power(np.abs(x), exponent)


def norm_const_A(h: float) -> float:
    """
    Variance of B(1, H) under the moving-average kernel.

    A(H) = Gamma(H + 1/2)^2 / (2H sin(pi H) Gamma(2H)), via log-gamma.
    """
    h = _check_hurst(h)
    log_a = 2.0 * gammaln(h + 0.5) - math.log(2.0 * h) - math.log(math.sin(math.pi * h)) - gammaln(2.0 * h)
    return float(math.exp(log_a))


def fbm_cov(t: float, s: float, h: float, normalization: str = 'kernel') -> float:
    """
    Covariance of fBm at times t and s.

    Args:
        t, s: times (any sign)
        h: Hurst exponent in (0, 1)
        normalization: 'kernel' multiplies the standard covariance by A(h)

    Returns:
        scale/2 * (|t|^2h + |s|^2h - |t-s|^2h)
    """
    h = _check_hurst(h)
    scale = norm_const_A(h) if _check_normalization(normalization) == 'kernel' else 1.0
    two_h = 2.0 * h
    return float(0.5 * scale * (_abs_pow(t, two_h) + _abs_pow(s, two_h) - _abs_pow(t - s, two_h)))


def fbm_cov_matrix(times: np.ndarray, h: float, normalization: str = 'kernel') -> np.ndarray:
    """Gram matrix of fbm_cov over a set of times."""
    h = _check_hurst(h)
    scale = norm_const_A(h) if _check_normalization(normalization) == 'kernel' else 1.0
    t = np.asarray(times, dtype=float)
    two_h = 2.0 * h
    powers = _abs_pow(t, two_h)
    return 0.5 * scale * (powers[:, None] + powers[None, :] - _abs_pow(t[:, None] - t[None, :], two_h))


@dataclass(frozen=True)
class MbmCovarianceTerms:
    """Exponent and constant appearing in the field covariance."""
    h_mean: float
    h_half_diff: float
    d_factor: float


def mbm_cov_terms(h_t: float, h_s: float) -> MbmCovarianceTerms:
    """
    H_{t,s} = (H_s + H_t)/2, the half difference (H_s - H_t)/2 and D(H_t, H_s).

    D is only finite away from h_mean = 1/2; at exactly 1/2 it is reported as inf.
    """
    h_t = _check_hurst(h_t, 'h_t')
    h_s = _check_hurst(h_s, 'h_s')
    h_mean = 0.5 * (h_t + h_s)
    h_half_diff = 0.5 * (h_s - h_t)
    denominator = 2.0 * math.pi * h_mean * (1.0 - 2.0 * h_mean)
    log_numerator = gammaln(h_t + 0.5) + gammaln(h_s + 0.5) + gammaln(2.0 - 2.0 * h_mean)
    d_factor = math.exp(log_numerator) / denominator if denominator != 0.0 else math.inf
    return MbmCovarianceTerms(h_mean=h_mean, h_half_diff=h_half_diff, d_factor=d_factor)


def _mbm_cov_direct(t: float, s: float, h_t: float, h_s: float) -> float:
    terms = mbm_cov_terms(h_t, h_s)
    h = terms.h_mean
    tilde = terms.h_half_diff
    two_h = 2.0 * h
    bracket = (
        _abs_pow(t, two_h) * math.cos(math.pi * (tilde - np.sign(t) * h))
        + _abs_pow(s, two_h) * math.cos(math.pi * (tilde + np.sign(s) * h))
        - _abs_pow(t - s, two_h) * math.cos(math.pi * (tilde - np.sign(t - s) * h))
    )
    return float(terms.d_factor * bracket)


def mbm_cov(t: float, s: float, h_t: float, h_s: float, allow_limit: bool = False) -> float:
    """
    Covariance of the field mBm, E[B(t, H_t) B(s, H_s)].

    Args:
        t, s: times
        h_t, h_s: Hurst values at t and s
        allow_limit: evaluate the removable singularity at h_mean = 1/2 by
            averaging the formula at h_mean +/- LIMIT_OFFSET

    Raises:
        RemovableSingularityError: |h_mean - 1/2| < 1e-6 and allow_limit is False
    """
    h_t = _check_hurst(h_t, 'h_t')
    h_s = _check_hurst(h_s, 'h_s')
    h_mean = 0.5 * (h_t + h_s)
    if abs(h_mean - 0.5) >= SINGULARITY_GUARD:
        return _mbm_cov_direct(t, s, h_t, h_s)
    if not allow_limit:
        raise RemovableSingularityError(
            f"mean Hurst {h_mean} is within {SINGULARITY_GUARD} of 1/2; pass allow_limit=True"
        )
    shift = LIMIT_OFFSET + (0.5 - h_mean)
    upper = _mbm_cov_direct(t, s, h_t + shift, h_s + shift)
    shift = -LIMIT_OFFSET + (0.5 - h_mean)
    lower = _mbm_cov_direct(t, s, h_t + shift, h_s + shift)
    logger.debug("mbm_cov limit evaluation at h_mean=%s", h_mean)
    return 0.5 * (upper + lower)


def mbm_field_cov_quadrature(t: float, s: float, h_t: float, h_s: float) -> float:
    """
    E[B(t, H_t) B(s, H_s)] by direct numerical integration of the kernels.

    Independent of the closed form; used to cross-check it.
    """
    a = _check_hurst(h_t, 'h_t') - 0.5
    b = _check_hurst(h_s, 'h_s') - 0.5

    def kernel(time, exponent, u):
        lead = (time - u) ** exponent if time - u > 0 else 0.0
        tail = (-u) ** exponent if -u > 0 else 0.0
        return lead - tail

    def integrand(u):
        return kernel(t, a, u) * kernel(s, b, u)

    upper = min(max(t, 0.0), max(s, 0.0))
    edges = sorted({e for e in (-1.0, 0.0, t, s) if e <= upper} | {upper})
    total, _ = integrate.quad(integrand, -np.inf, edges[0], limit=400, epsabs=1e-13, epsrel=1e-11)
    for left, right in zip(edges[:-1], edges[1:]):
        if right > left:
            piece, _ = integrate.quad(integrand, left, right, limit=400, epsabs=1e-13, epsrel=1e-11)
            total += piece
    return float(total)


def fgn_autocov(k: np.ndarray, h: float, step: float = 1.0) -> np.ndarray:
    """Autocovariance at integer lags k of standard fBm increments over cells of length step."""
    two_h = 2.0 * _check_hurst(h)
    k = np.asarray(k, dtype=float)
    return 0.5 * step ** two_h * (
        _abs_pow(k + 1.0, two_h) - 2.0 * _abs_pow(k, two_h) + _abs_pow(k - 1.0, two_h)
    )


def _circulant_increments(gamma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = gamma.size - 1
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    m = row.size
    eigenvalues = scipy.fft.fft(row).real
    if eigenvalues.min() < -EMBEDDING_TOL * eigenvalues.max():
        return None
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    noise = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return scipy.fft.fft(np.sqrt(eigenvalues / m) * noise).real[:n]


def _cholesky_increments(gamma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = gamma.size - 1
    try:
        lower = scipy.linalg.cholesky(scipy.linalg.toeplitz(gamma[:n]), lower=True)
    except scipy.linalg.LinAlgError as e:
        raise EmbeddingError(f"Cholesky fallback failed: {e}")
    return lower @ rng.standard_normal(n)


def exact_fbm(
    h: float,
    grid: UniformGrid,
    seed: int,
    stream_id: int = 0,
    normalization: str = 'standard',
    domain: int = DOMAIN_FBM
) -> SampledPath:
    """
    Sample fBm exactly on a grid starting at 0.

    Args:
        h: Hurst exponent in (0, 1)
        grid: uniform grid with t_min = 0
        seed, stream_id: stream key
        normalization: 'standard' (Var B_1 = 1) or 'kernel' (Var B_1 = A(h))
        domain: stream domain, lets callers keep independent fBm families apart

    Returns:
        SampledPath with value 0 at t = 0
    """
    h = _check_hurst(h)
    _check_normalization(normalization)
    if abs(grid.t_min) > 1e-12 * max(1.0, abs(grid.t_max)):
        raise GridError(f"exact_fbm needs a grid starting at 0, got t_min={grid.t_min}")
    rng = rng_for(seed, stream_id, domain)
    gamma = fgn_autocov(np.arange(grid.n_cells + 1), h, grid.step)
    increments = _circulant_increments(gamma, rng) if grid.n_cells > 1 else None
    if increments is None:
        if grid.n_cells > 1:
            logger.warning("Circulant embedding not nonnegative for H=%s, n=%d; using Cholesky",
                           h, grid.n_cells)
        increments = _cholesky_increments(gamma, rng)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    if normalization == 'kernel':
        values = values * math.sqrt(norm_const_A(h))
    return SampledPath(grid=grid, values=values, label=f"fbm[H={h},{normalization}]")


def _expectation(
    fn: Callable[[np.ndarray], np.ndarray],
    h_dist: DistributionLike,
    sigma_dist: DistributionLike,
    n_samples: int,
    seed: int
) -> float:
    """E[sigma^2] * E[fn(H)] with H and sigma independent."""
    h_dist = as_distribution(h_dist)
    sigma_dist = as_distribution(sigma_dist)
    low, high = h_dist.support()
    if low <= 0.0 or high >= 1.0:
        raise ValueError(f"Hurst distribution must live in (0, 1), support is [{low}, {high}]")
    if sigma_dist.support()[0] <= 0.0:
        raise ValueError("volatility distribution must live in (0, inf)")

    if h_dist.is_finite:
        values, weights = h_dist.atoms()
        mean_fn = float(np.dot(weights, fn(values)))
    else:
        draws = h_dist.sample(rng_for(seed, 0, DOMAIN_EXPECTATION), n_samples)
        mean_fn = float(np.mean(fn(draws)))
    if sigma_dist.is_finite:
        values, weights = sigma_dist.atoms()
        mean_sq = float(np.dot(weights, values ** 2))
    else:
        draws = sigma_dist.sample(rng_for(seed, 1, DOMAIN_EXPECTATION), n_samples)
        mean_sq = float(np.mean(draws ** 2))

    result = mean_sq * mean_fn
    if not math.isfinite(result):
        raise MultifracError("expectation is not finite (moments diverge)")
    return result


def _norm_const_vec(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    return np.exp(2.0 * gammaln(h + 0.5) - np.log(2.0 * h) - np.log(np.sin(np.pi * h)) - gammaln(2.0 * h))


def _fbm_cov_vec(t: float, s: float) -> Callable[[np.ndarray], np.ndarray]:
    def fn(h):
        two_h = 2.0 * np.asarray(h, dtype=float)
        return 0.5 * _norm_const_vec(h) * (
            _abs_pow(t, two_h) + _abs_pow(s, two_h) - _abs_pow(t - s, two_h)
        )
    return fn


def stationary_cov(
    t: float,
    s: float,
    h_dist: DistributionLike,
    sigma_dist: DistributionLike = 1.0,
    n_samples: int = 200_000,
    seed: int = 0
) -> float:
    """
    Covariance of Itô-mBm with stationary H and sigma (independent of each other).

    E[sigma_0^2 A(H_0)/2 (|t|^2H0 + |s|^2H0 - |t-s|^2H0)]; exact for finite
    distributions, Monte Carlo with n_samples draws otherwise.
    """
    return _expectation(_fbm_cov_vec(t, s), h_dist, sigma_dist, n_samples, seed)


def increment_autocov(
    delta: int,
    h_dist: DistributionLike,
    sigma_dist: DistributionLike = 1.0,
    n_samples: int = 200_000,
    seed: int = 0
) -> float:
    """
    Autocovariance at lag delta of the unit increments K_{t+1} - K_t.

    Includes the sigma^2 A(H)/2 factor so that it agrees with stationary_cov
    by polarization.
    """
    if isinstance(delta, bool) or int(delta) != delta or delta < 0:
        raise ValueError(f"delta must be a nonnegative integer, got {delta!r}")
    d = float(delta)

    def fn(h):
        two_h = 2.0 * np.asarray(h, dtype=float)
        return 0.5 * _norm_const_vec(h) * (
            _abs_pow(d + 1.0, two_h) - 2.0 * _abs_pow(d, two_h) + _abs_pow(d - 1.0, two_h)
        )

    return _expectation(fn, h_dist, sigma_dist, n_samples, seed)


def local_cov_limit(
    r: float,
    v: float,
    h_dist: DistributionLike,
    sigma_dist: DistributionLike = 1.0,
    n_samples: int = 200_000,
    seed: int = 0
) -> float:
    """
    Limit covariance of the rescaled increments h^-H_t (X_{t+hr} - X_t).

    E[sigma_t^2 A(H_t)/2 (|r|^2Ht + |v|^2Ht - |r-v|^2Ht)].
    """
    return _expectation(_fbm_cov_vec(r, v), h_dist, sigma_dist, n_samples, seed)


@dataclass
class CovarianceTable:
    """Covariance values at a list of (t, s) queries."""
    queries: List[Tuple[float, float]]
    values: List[float]
    model: str

    def __post_init__(self):
        if len(self.queries) != len(self.values):
            raise ValueError("queries and values must have the same length")

    def to_rows(self) -> List[List[Any]]:
        return [[t, s, value, self.model] for (t, s), value in zip(self.queries, self.values)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model,
            'rows': [{'t': t, 's': s, 'value': value} for (t, s), value in zip(self.queries, self.values)]
        }


COVARIANCE_HEADER = ['t', 's', 'value', 'model']
