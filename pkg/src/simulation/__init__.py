# Multifractional Process Simulation Package

from .core import (
    UniformGrid,
    SampledPath,
    NoiseGrid,
    make_noise,
    cumulate,
    rng_for,
    MultifracError,
    GridError,
    HurstSpecError,
    KernelSpecError,
    TruncationError,
    RemovableSingularityError,
    EmbeddingError
)
from .distributions import (
    Distribution,
    PointMass,
    FiniteMixture,
    UniformDistribution,
    EmpiricalDistribution,
    as_distribution,
    distribution_from_dict
)
from .gaussian import (
    norm_const_A,
    fbm_cov,
    fbm_cov_matrix,
    mbm_cov,
    mbm_cov_terms,
    MbmCovarianceTerms,
    mbm_field_cov_quadrature,
    fgn_autocov,
    exact_fbm,
    stationary_cov,
    increment_autocov,
    local_cov_limit,
    CovarianceTable
)
from .hurst import HurstSpec, HurstPath, Modulus, generate_hurst, lsc_variant, hurst_marginal
from .kernels import (
    KernelFamily,
    KernelSpec,
    ConditionABounds,
    create_kernel_family,
    create_kernel_spec,
    default_bounds,
    eval_kernel,
    kernel_weights,
    astar_remainder,
    truncation_horizon,
    check_condition_a
)
from .moving_average import (
    SimConfig,
    PathSample,
    driver_grid,
    simulate_moving_average,
    simulate_mbm_field,
    simulate_paths,
    rescaled_increment_paths
)
from .parallel import map_paths, resolve_threads
