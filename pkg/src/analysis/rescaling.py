"""
Rescaling Limit Verification

Monte Carlo estimate of the covariance of the rescaled increments
Z_r = h^(-H_t) (X_{t+hr} - X_t), with the realized H_t of each path,
against its small-h limit E[sigma_t^2 A(H_t)/2 (|r|^2H + |v|^2H - |r-v|^2H)].
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from simulation.core import DOMAIN_EXPECTATION, GridError, rng_for
from simulation.distributions import Distribution, PointMass
from simulation.gaussian import local_cov_limit, norm_const_A
from simulation.hurst import HurstSpec, hurst_marginal
from simulation.kernels import KernelSpec
from simulation.moving_average import SimConfig, simulate_paths

from .reports import MIN_PATHS, RescalingReport

logger = logging.getLogger(__name__)

MAX_MIXTURE_ATOMS = 500


def limit_marginal_cdf(h_dist: Distribution, sigma: float, r: float):
    """CDF of the limit law of Z_r: a Gaussian mixture over the Hurst atoms."""
    if h_dist.is_finite:
        values, weights = h_dist.atoms()
    else:
        values = h_dist.sample(rng_for(0, 0, DOMAIN_EXPECTATION), MAX_MIXTURE_ATOMS)
        weights = np.full(values.size, 1.0 / values.size)
    if values.size > MAX_MIXTURE_ATOMS:
        keep = np.linspace(0, values.size - 1, MAX_MIXTURE_ATOMS).astype(int)
        values = values[keep]
        weights = np.full(keep.size, 1.0 / keep.size)
    scales = abs(sigma) * np.sqrt([norm_const_A(h) for h in values]) * abs(r) ** values

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.sum(weights * stats.norm.cdf(x[..., None] / scales), axis=-1)

    return cdf


def rescaling_test(
    kernel: KernelSpec,
    hurst_spec: HurstSpec,
    cfg: SimConfig,
    t: float,
    h_values: Sequence[float],
    rv_pairs: Sequence[Tuple[float, float]],
    n_paths: int,
    threads: Optional[int] = None,
    marginal_samples: int = 20_000
) -> RescalingReport:
    """
    Compare empirical and limiting covariances of rescaled increments.

    Args:
        kernel, hurst_spec, cfg: process to simulate
        t: base time (an output node)
        h_values: decreasing scales; every t + h r must be an output node
        rv_pairs: (r, v) pairs
        n_paths: number of Monte Carlo paths
        threads: worker threads
        marginal_samples: draws of H_t for the limit when H is random

    Returns:
        RescalingReport; KS distances compare Z_1 with the limit mixture
    """
    h_values = [float(h) for h in h_values]
    pairs = [(float(r), float(v)) for r, v in rv_pairs]
    if not pairs:
        raise ValueError("rescaling_test needs at least one (r, v) pair")
    if any(b >= a for a, b in zip(h_values[:-1], h_values[1:])):
        raise ValueError(f"h_values must be strictly decreasing, got {h_values}")
    if n_paths < MIN_PATHS:
        logger.warning("only %d paths for the rescaling test; the verdict needs %d and will fail",
                       n_paths, MIN_PATHS)

    grid = cfg.grid
    r_values = sorted({0.0, 1.0} | {r for pair in pairs for r in pair})
    index = {}
    for h in h_values:
        for r in r_values:
            x = t + h * r
            if x < grid.t_min - 1e-9 * grid.step or x > grid.t_max + 1e-9 * grid.step:
                raise GridError(f"t + h r = {x} is outside [{grid.t_min}, {grid.t_max}]")
            index[(h, r)] = grid.node_index(x)
    nodes = np.array(sorted(set(index.values())), dtype=np.int64)
    column = {k: int(np.searchsorted(nodes, k)) for k in nodes}

    sample = simulate_paths(kernel, hurst_spec, cfg, n_paths, threads=threads, nodes=nodes)
    origin = column[grid.node_index(t)]
    h_t = sample.hurst[:, origin]
    sigma_t = float(kernel.sigma_at(t))

    h_dist = hurst_marginal(hurst_spec, t, marginal_samples, cfg.seed)
    sigma_dist = PointMass(abs(sigma_t))
    limit = np.array([local_cov_limit(r, v, h_dist, sigma_dist) for r, v in pairs])
    cdf = limit_marginal_cdf(h_dist, sigma_t, 1.0)

    empirical = np.empty((len(h_values), len(pairs)))
    stderr = np.empty_like(empirical)
    ks = []
    for i, h in enumerate(h_values):
        scale = h ** (-h_t)

        def rescaled(r):
            return (sample.values[:, column[index[(h, r)]]] - sample.values[:, origin]) * scale

        for j, (r, v) in enumerate(pairs):
            products = rescaled(r) * rescaled(v)
            empirical[i, j] = products.mean()
            stderr[i, j] = products.std(ddof=1) / np.sqrt(n_paths) if n_paths > 1 else np.inf
        ks.append(float(stats.kstest(rescaled(1.0), cdf).statistic))
        logger.debug("h=%s: empirical %s, limit %s", h, empirical[i].tolist(), limit.tolist())

    return RescalingReport(
        t=float(t),
        h_values=h_values,
        pairs=pairs,
        empirical_cov=empirical,
        stderr=stderr,
        limit_cov=limit,
        ks_distance=ks,
        n_paths=n_paths
    )
