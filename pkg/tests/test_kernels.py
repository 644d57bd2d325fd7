import math

import numpy as np
import pytest

from simulation.core import KernelSpecError, SampledPath, TruncationError, UniformGrid
from simulation.kernels import (
    MAX_TAIL_HORIZON, ConditionABounds, ItoMbmKernel, KernelSpec, LogModifiedKernel, MaternKernel, TruncatedKernel,
    astar_remainder, check_condition_a, create_kernel_family, create_kernel_spec, default_bounds,
    eval_kernel, kernel_weights, pos_pow, truncation_horizon
)


@pytest.fixture
def ito_spec():
    return create_kernel_spec('ito_mbm')


@pytest.fixture
def matern_spec():
    return create_kernel_spec('matern', lam=4.0)


def test_pos_pow_is_zero_off_the_positive_axis():
    values = pos_pow(np.array([-1.0, 0.0, 4.0]), -0.5)
    assert np.array_equal(values, [0.0, 0.0, 0.5])


def test_ito_kernel_values(ito_spec):
    assert eval_kernel(ito_spec, 0.2, 1.0, 0.7) == pytest.approx(0.8 ** 0.2)
    assert eval_kernel(ito_spec, -1.0, 1.0, 0.7) == pytest.approx(2.0 ** 0.2 - 1.0)
    assert eval_kernel(ito_spec, 1.5, 1.0, 0.7) == 0.0


def test_ito_kernel_is_indicator_at_brownian_point(ito_spec):
    assert eval_kernel(ito_spec, 0.5, 1.0, 0.5) == 1.0
    assert eval_kernel(ito_spec, -3.0, 1.0, 0.5) == 0.0


def test_kernel_rejects_bad_inputs(ito_spec):
    with pytest.raises(KernelSpecError):
        eval_kernel(ito_spec, math.nan, 1.0, 0.5)
    with pytest.raises(KernelSpecError):
        eval_kernel(ito_spec, 0.0, 1.0, 1.0)


def test_kernel_weights_broadcast(ito_spec):
    s = np.array([-1.0, 0.0, 0.5, 2.0])
    weights = kernel_weights(ito_spec, s, 1.0, 0.7)
    expected = [eval_kernel(ito_spec, x, 1.0, 0.7) for x in s]
    assert np.allclose(weights, expected)


def test_kernel_weights_use_sampled_sigma():
    grid = UniformGrid(-2.0, 2.0, 4)
    sigma = SampledPath(grid, [0.5, 0.5, 1.0, 1.0, 1.0])
    spec = create_kernel_spec('ito_mbm', sigma)
    assert eval_kernel(spec, -1.5, 1.0, 0.5) == 0.0
    assert eval_kernel(spec, 0.5, 1.0, 0.5) == 1.0
    assert spec.sigma_max == 1.0


def test_matern_kernel(matern_spec):
    assert eval_kernel(matern_spec, 0.0, 0.5, 0.3) == pytest.approx(0.5 ** -0.2 * math.exp(-2.0))
    assert eval_kernel(matern_spec, -1.0, 0.5, 0.3) == pytest.approx(1.5 ** -0.2 * math.exp(-6.0))


def test_log_modified_kernel_vanishes_below_unit_lag():
    spec = create_kernel_spec('log_modified')
    assert eval_kernel(spec, 0.5, 1.0, 0.7) == 0.0
    assert eval_kernel(spec, 0.0, 3.0, 0.7) == pytest.approx((3.0 * math.log(3.0)) ** 0.2)
    assert not spec.family.satisfies_astar
    assert spec.bounds.rho is None


def test_truncated_kernel_taper():
    family = TruncatedKernel(2.0)
    assert family.taper(0.5) == 1.0
    assert family.taper(2.0) == 0.0
    assert family.profile(3.0, 0.2) == 0.0
    assert family.profile(0.5, 0.2) == pytest.approx(0.5 ** 0.2)


def test_analytic_derivatives_match_finite_differences():
    x = np.array([0.3, 0.8, 1.7, 3.0])
    for family in (ItoMbmKernel(), MaternKernel(2.0), LogModifiedKernel(), TruncatedKernel(2.5)):
        step = 1e-6
        numeric = (family.profile(x + step, 0.2) - family.profile(x - step, 0.2)) / (2.0 * step)
        assert np.allclose(family.profile_derivative(x, 0.2), numeric, rtol=1e-5, atol=1e-8)


def test_create_kernel_family_errors():
    with pytest.raises(KernelSpecError):
        create_kernel_family('gaussian')
    with pytest.raises(KernelSpecError):
        create_kernel_family('matern')
    with pytest.raises(KernelSpecError):
        create_kernel_family('matern', lam=-1.0)
    with pytest.raises(KernelSpecError):
        create_kernel_family('truncated', cutoff=0.0)


def test_default_bounds_ito():
    bounds = default_bounds(ItoMbmKernel())
    assert bounds.l_bar == pytest.approx(1.05)
    assert bounds.r_lower == pytest.approx(0.55)
    assert bounds.rho == 1.0


def test_default_bounds_scale_with_sigma():
    assert default_bounds(ItoMbmKernel(), sigma_max=3.0).l_bar == pytest.approx(3.15)


def test_condition_a_bounds_validation():
    with pytest.raises(KernelSpecError):
        ConditionABounds(l_bar=1.0, r_lower=0.5)
    with pytest.raises(KernelSpecError):
        ConditionABounds(l_bar=0.0, r_lower=1.0)


def test_kernel_spec_rejects_sigma_above_l_bar():
    with pytest.raises(KernelSpecError):
        KernelSpec(ItoMbmKernel(), 2.0, ConditionABounds(1.0, 0.6))
    with pytest.raises(KernelSpecError):
        create_kernel_spec('ito_mbm', 0.0)


@pytest.mark.parametrize('family,params', [
    ('ito_mbm', {}), ('matern', {'lam': 4.0}), ('log_modified', {}), ('truncated', {'cutoff': 2.0})
])
@pytest.mark.parametrize('h', [0.3, 0.7])
def test_declared_bounds_hold(family, params, h):
    spec = create_kernel_spec(family, 1.0, 0.1, 0.9, **params)
    check = check_condition_a(spec, h)
    assert check.passed, check.to_dict()


def test_astar_remainder(ito_spec, matern_spec):
    assert astar_remainder(ito_spec, 0.5, 1.0, 0.7) == pytest.approx(0.0, abs=1e-15)
    assert astar_remainder(ito_spec, -0.2, 0.5, 0.7) == pytest.approx(-(0.2 ** 0.2))
    x = 0.25
    remainder = astar_remainder(matern_spec, 0.0, x, 0.3)
    assert abs(remainder) <= matern_spec.bounds.l_bar * x ** (0.3 - 0.5 + 1.0)
    with pytest.raises(KernelSpecError):
        astar_remainder(ito_spec, 0.0, 1.5, 0.7)


def test_truncation_horizon_closed_forms():
    assert truncation_horizon(ConditionABounds(1.0, 1.0), 0.01, 1e-3) == pytest.approx(100.0)
    assert truncation_horizon(ConditionABounds(1.0, 1.5), 0.01, 1e-3) == pytest.approx(math.sqrt(50.0))
    assert truncation_horizon(ConditionABounds(1.0, 1.0), 0.01, 1e3) == 1.0


def test_truncation_horizon_cap():
    with pytest.raises(TruncationError):
        truncation_horizon(ConditionABounds(1.0, 0.55), 0.01, 1e-6)
    with pytest.raises(ValueError):
        truncation_horizon(ConditionABounds(1.0, 1.0), 0.01, 0.0)


@pytest.mark.parametrize('family', [ItoMbmKernel(), LogModifiedKernel(), MaternKernel(2.0)])
@pytest.mark.parametrize('a', [-0.2, 0.3])
def test_remote_weight_matches_the_direct_difference(family, a):
    u = np.array([0.5, 3.0, 10.0, 100.0])
    direct = family.profile(0.5 + u, a) - family.reference_term(u, a)
    assert np.allclose(family.remote_weight(0.5, u, a), direct, rtol=1e-8, atol=1e-14)


def test_remote_weight_keeps_precision_far_away():
    a = 0.45
    u = 1e60
    ito = ItoMbmKernel()
    assert ito.profile(1.0 + u, a) - ito.reference_term(u, a) == 0.0
    assert ito.remote_weight(1.0, u, a) == pytest.approx(a * u ** (a - 1.0), rel=1e-9)

    log_modified = LogModifiedKernel()
    u = 1e40
    base = u * math.log(u)
    expected = a * base ** (a - 1.0) * (math.log(u) + 1.0)
    assert log_modified.remote_weight(1.0, u, a) == pytest.approx(expected, rel=1e-6)


def test_truncation_horizon_with_a_raised_cap():
    bounds = ConditionABounds(1.0, 0.55)
    expected = math.exp((2 * math.log(0.01) - math.log(0.1) - 2 * math.log(1e-6)) / 0.1)
    assert truncation_horizon(bounds, 0.01, 1e-6, cap=MAX_TAIL_HORIZON) == pytest.approx(expected)
    with pytest.raises(TruncationError):
        truncation_horizon(ConditionABounds(1.0, 0.51), 1.0, 1e-3, cap=MAX_TAIL_HORIZON)
