"""
Moving-Average Kernel Families

A kernel g_s(t) is a volatility sigma_s times a profile in the lag
x = t - s, minus an optional reference term in -s:

    g_s(t) = sigma_s * (f(t - s, a) - r(-s, a)),   a = H_s - 1/2

with f(x, a) = 0 for x <= 0. Families:

    ito_mbm       f = x^a,                      r = f
    matern        f = x^a exp(-lam x),          r = 0
    log_modified  f = (x log x)^a where x log x > 0, else 0;   r = f
    truncated     f = x^a phi(x), phi a cubic taper on [c/2, c];  r = 0

remote_weight gives f(t + u, a) - r(u, a) for driver times -u far before t
without the cancellation of the two terms.

Each family also declares its Condition-A data (L_bar, R_lower, rho) through
default_bounds, computed numerically from the analytic derivatives.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Any, Optional, Tuple, Union

import numpy as np

from .core import KernelSpecError, SampledPath, TruncationError

logger = logging.getLogger(__name__)

MAX_HORIZON = 1e6
# Cap for the history of a driver with geometric far-past cells
MAX_TAIL_HORIZON = 1e200

# Canonical lag grids on which default_bounds and check_condition_a work
NEAR_LAGS = np.logspace(-6, 0, 241)[:-1]
FAR_LAGS = np.logspace(0, 4, 161)
BOUND_MARGIN = 1.05
N_BOUND_LEVELS = 17
# Lags within this relative distance of a singular lag are excluded from the bounds
SINGULAR_EXCLUSION = 0.05
FD_RELATIVE_STEP = 1e-5


def pos_pow(x, exponent):
    """x^exponent for x > 0 and 0 elsewhere, elementwise and warning free."""
    x = np.asarray(x, dtype=float)
    positive = x > 0
    return np.where(positive, np.power(np.where(positive, x, 1.0), exponent), 0.0)


class KernelFamily(ABC):
    """Profile f(x, a) of a kernel family and its reference term."""

    name: str = ''
    #: whether the family has a Condition-A* expansion around sigma x^a
    satisfies_astar: bool = True

    @abstractmethod
    def profile(self, x, a) -> np.ndarray:
        """f(x, a), zero for x <= 0."""
        pass

    @abstractmethod
    def profile_derivative(self, x, a) -> np.ndarray:
        """df/dx for x > 0, zero for x <= 0."""
        pass

    def reference_term(self, u, a) -> np.ndarray:
        """r(u, a) evaluated at u = -s."""
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(a)).shape)

    def remote_weight(self, t, u, a) -> np.ndarray:
        """
        f(t + u, a) - r(u, a) for a driver time s = -u far before t.

        Families whose two terms nearly cancel at large u override this
        with a form that keeps its relative precision.
        """
        u = np.asarray(u, dtype=float)
        return self.profile(np.asarray(t, dtype=float) + u, a) - self.reference_term(u, a)

    def singular_lags(self) -> Tuple[float, ...]:
        """Positive lags where the derivative is unbounded."""
        return ()

    def far_exponent(self, h_upper: float) -> float:
        """Declared tail exponent R_lower for Hurst values up to h_upper."""
        return 1.0

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass


class ItoMbmKernel(KernelFamily):
    """(t-s)_+^a - (-s)_+^a, the adapted multifractional kernel."""

    name = 'ito_mbm'

    def profile(self, x, a):
        return pos_pow(x, a)

    def profile_derivative(self, x, a):
        return np.asarray(a) * pos_pow(x, np.asarray(a) - 1.0)

    def reference_term(self, u, a):
        return pos_pow(u, a)

    def remote_weight(self, t, u, a):
        u = np.asarray(u, dtype=float)
        a = np.asarray(a, dtype=float)
        return pos_pow(u, a) * np.expm1(a * np.log1p(np.asarray(t, dtype=float) / u))

    def far_exponent(self, h_upper):
        return 1.5 - h_upper

    def to_dict(self):
        return {'family': self.name}


class MaternKernel(KernelFamily):
    """(t-s)_+^a exp(-lam (t-s))."""

    name = 'matern'

    def __init__(self, lam: float):
        lam = float(lam)
        if not (math.isfinite(lam) and lam > 0.0):
            raise KernelSpecError(f"matern needs lam > 0, got {lam}")
        self.lam = lam

    def profile(self, x, a):
        x = np.asarray(x, dtype=float)
        return pos_pow(x, a) * np.exp(-self.lam * np.where(x > 0, x, 0.0))

    def profile_derivative(self, x, a):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(x > 0, (np.asarray(a) / safe - self.lam) * self.profile(x, a), 0.0)

    def to_dict(self):
        return {'family': self.name, 'lam': self.lam}


class LogModifiedKernel(KernelFamily):
    """
    [(t-s) log(t-s)]_+^a - [(-s) log(-s)]_+^a.

    Each term is taken as 0 where x log x <= 0, i.e. for lags in (0, 1].
    The derivative blows up at lag 1 and the kernel vanishes next to the
    diagonal, so the family has no Condition-A* expansion.
    """

    name = 'log_modified'
    satisfies_astar = False

    @staticmethod
    def _base(x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(x > 0, safe * np.log(safe), 0.0)

    def profile(self, x, a):
        return pos_pow(self._base(x), a)

    def profile_derivative(self, x, a):
        x = np.asarray(x, dtype=float)
        base = self._base(x)
        safe = np.where(x > 0, x, 1.0)
        return np.where(base > 0, np.asarray(a) * pos_pow(base, np.asarray(a) - 1.0) * (np.log(safe) + 1.0), 0.0)

    def reference_term(self, u, a):
        return pos_pow(self._base(u), a)

    def remote_weight(self, t, u, a):
        u = np.asarray(u, dtype=float)
        a = np.asarray(a, dtype=float)
        t = np.asarray(t, dtype=float)
        x = t + u
        stable = (u > 1.0) & (x > 1.0)
        safe_u = np.where(stable, u, 2.0)
        ratio = np.log1p(np.where(stable, t / safe_u, 0.0))
        log_u = np.log(safe_u)
        # log of base(x) / base(u) = log(x / u) + log(log x / log u)
        shift = ratio + np.log1p(ratio / log_u)
        close = pos_pow(safe_u * log_u, a) * np.expm1(a * shift)
        return np.where(stable, close, self.profile(x, a) - self.reference_term(u, a))

    def singular_lags(self):
        return (1.0,)

    def far_exponent(self, h_upper):
        return 1.5 - h_upper

    def to_dict(self):
        return {'family': self.name}


class TruncatedKernel(KernelFamily):
    """(t-s)_+^a phi(t-s) with phi = 1 up to cutoff/2 and a cubic taper to 0 at cutoff."""

    name = 'truncated'

    def __init__(self, cutoff: float):
        cutoff = float(cutoff)
        if not (math.isfinite(cutoff) and cutoff > 0.0):
            raise KernelSpecError(f"truncated needs cutoff > 0, got {cutoff}")
        self.cutoff = cutoff

    def taper(self, x) -> np.ndarray:
        half = 0.5 * self.cutoff
        u = np.clip((np.asarray(x, dtype=float) - half) / half, 0.0, 1.0)
        return 1.0 - 3.0 * u ** 2 + 2.0 * u ** 3

    def taper_derivative(self, x) -> np.ndarray:
        half = 0.5 * self.cutoff
        u = np.clip((np.asarray(x, dtype=float) - half) / half, 0.0, 1.0)
        return (-6.0 * u + 6.0 * u ** 2) / half

    def profile(self, x, a):
        return pos_pow(x, a) * self.taper(x)

    def profile_derivative(self, x, a):
        a = np.asarray(a)
        return (a * pos_pow(x, a - 1.0) * self.taper(x)
                + pos_pow(x, a) * self.taper_derivative(x))

    def to_dict(self):
        return {'family': self.name, 'cutoff': self.cutoff}


FAMILIES = {
    'ito_mbm': ItoMbmKernel,
    'matern': MaternKernel,
    'log_modified': LogModifiedKernel,
    'truncated': TruncatedKernel,
}


def create_kernel_family(name: str, **params) -> KernelFamily:
    """
    Factory function to create a kernel family.

    Args:
        name: 'ito_mbm', 'matern' (lam), 'log_modified' or 'truncated' (cutoff)
        **params: family parameters

    Returns:
        KernelFamily instance
    """
    if name not in FAMILIES:
        raise KernelSpecError(f"Unknown kernel family: {name}. Choose from {sorted(FAMILIES)}")
    try:
        return FAMILIES[name](**params)
    except TypeError as e:
        raise KernelSpecError(f"bad parameters for kernel family '{name}': {e}")


@dataclass(frozen=True)
class ConditionABounds:
    """
    Declared Condition-A data.

    Attributes:
        l_bar: bound on L_s (and on |sigma|)
        r_lower: tail decay exponent, > 1/2
        rho: Condition-A* remainder exponent, None when the family has none
    """
    l_bar: float
    r_lower: float
    rho: Optional[float] = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.l_bar) and self.l_bar > 0.0):
            raise KernelSpecError(f"l_bar must be positive and finite, got {self.l_bar}")
        if not self.r_lower > 0.5:
            raise KernelSpecError(f"r_lower must exceed 1/2, got {self.r_lower}")
        if self.rho is not None and not self.rho > 0.0:
            raise KernelSpecError(f"rho must be positive, got {self.rho}")

    def to_dict(self) -> Dict[str, Any]:
        return {'l_bar': self.l_bar, 'r_lower': self.r_lower, 'rho': self.rho}


def _regular_lags(family: KernelFamily, lags: np.ndarray) -> np.ndarray:
    keep = np.ones(lags.shape, dtype=bool)
    for singular in family.singular_lags():
        keep &= np.abs(lags - singular) > SINGULAR_EXCLUSION * singular
    return lags[keep]


def _bound_ratios(family: KernelFamily, h: float, r_lower: float, rho: Optional[float],
                  derivative=None) -> Dict[str, float]:
    """Largest |quantity| / (its power-law bound without L_bar) over the canonical lags."""
    a = h - 0.5
    derivative = derivative or family.profile_derivative
    near = _regular_lags(family, NEAR_LAGS)
    far = _regular_lags(family, FAR_LAGS)
    ratios = {
        'near_derivative': float(np.max(np.abs(derivative(near, a)) / near ** (a - 1.0))),
        'far_derivative': float(np.max(np.abs(derivative(far, a)) * far ** r_lower)),
        'value': float(np.max(np.abs(family.profile(near, a)) / near ** a)),
        'remainder': 0.0,
    }
    if rho is not None:
        remainder = family.profile(near, a) - near ** a
        ratios['remainder'] = float(np.max(np.abs(remainder) / near ** (a + rho)))
    return ratios


def default_bounds(
    family: KernelFamily,
    sigma_max: float = 1.0,
    h_lower: float = 0.05,
    h_upper: float = 0.95
) -> ConditionABounds:
    """
    Condition-A data for a family, for Hurst values in [h_lower, h_upper].

    R_lower comes from the family (3/2 - h_upper for the power-law tails,
    1 otherwise); L_bar is the largest ratio of the analytic derivative,
    value and A* remainder to their power-law bounds over the canonical lag
    grids and N_BOUND_LEVELS Hurst levels, times sigma_max and a 5% margin.
    """
    if not 0.0 < h_lower <= h_upper < 1.0:
        raise KernelSpecError(f"need 0 < h_lower <= h_upper < 1, got [{h_lower}, {h_upper}]")
    if not sigma_max > 0.0:
        raise KernelSpecError(f"sigma_max must be positive, got {sigma_max}")
    r_lower = family.far_exponent(h_upper)
    rho = 1.0 if family.satisfies_astar else None
    worst = 1.0
    for h in np.linspace(h_lower, h_upper, N_BOUND_LEVELS):
        worst = max(worst, max(_bound_ratios(family, float(h), r_lower, rho).values()))
    bounds = ConditionABounds(l_bar=BOUND_MARGIN * sigma_max * worst, r_lower=r_lower, rho=rho)
    logger.debug("default bounds for %s on [%s, %s]: %s", family.name, h_lower, h_upper, bounds)
    return bounds


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its volatility sigma and declared Condition-A bounds."""
    family: KernelFamily
    sigma: Union[float, SampledPath]
    bounds: ConditionABounds

    def __post_init__(self):
        if not isinstance(self.sigma, SampledPath):
            object.__setattr__(self, 'sigma', float(self.sigma))
        if self.sigma_max > self.bounds.l_bar * (1.0 + 1e-12):
            raise KernelSpecError(f"|sigma| reaches {self.sigma_max}, above l_bar = {self.bounds.l_bar}")

    @property
    def name(self) -> str:
        return self.family.name

    @property
    def sigma_max(self) -> float:
        if isinstance(self.sigma, SampledPath):
            return float(np.max(np.abs(self.sigma.values)))
        return abs(self.sigma)

    def sigma_at(self, times) -> np.ndarray:
        """sigma at the given times (left-constant lookup for a sampled sigma)."""
        if isinstance(self.sigma, SampledPath):
            return np.asarray(self.sigma.at(times), dtype=float)
        return np.full(np.shape(times), self.sigma)

    def to_dict(self) -> Dict[str, Any]:
        data = self.family.to_dict()
        data['sigma'] = self.sigma.to_dict() if isinstance(self.sigma, SampledPath) else self.sigma
        data['bounds'] = self.bounds.to_dict()
        return data


def create_kernel_spec(
    family: str,
    sigma: Union[float, SampledPath] = 1.0,
    h_lower: float = 0.05,
    h_upper: float = 0.95,
    **params
) -> KernelSpec:
    """Build a KernelSpec with default_bounds for the given Hurst range."""
    kernel_family = create_kernel_family(family, **params)
    sigma_max = float(np.max(np.abs(sigma.values))) if isinstance(sigma, SampledPath) else abs(float(sigma))
    if sigma_max == 0.0:
        raise KernelSpecError("sigma must not vanish identically")
    bounds = default_bounds(kernel_family, sigma_max, h_lower, h_upper)
    return KernelSpec(family=kernel_family, sigma=sigma, bounds=bounds)


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise KernelSpecError(f"{name} must be finite, got {value!r}")


def kernel_weights(spec: KernelSpec, s, t, h, sigma=None) -> np.ndarray:
    """
    Vectorized g_s(t) for arrays s, t, h (broadcast together).

    Args:
        spec: kernel spec
        s: integration times
        t: evaluation times
        h: Hurst values at s
        sigma: volatility at s; looked up from spec when None

    Returns:
        Array of kernel values, 0 wherever s > t
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    _check_finite(s=s, t=t, h=h)
    if np.any((h <= 0.0) | (h >= 1.0)):
        raise KernelSpecError("Hurst values must lie in (0, 1)")
    if sigma is None:
        sigma = spec.sigma_at(s)
    a = h - 0.5
    family = spec.family
    values = np.asarray(sigma) * (family.profile(t - s, a) - family.reference_term(-s, a))
    return np.where(s > t, 0.0, values)


def eval_kernel(spec: KernelSpec, s: float, t: float, h_at_s: float) -> float:
    """
    g_s(t) for a single pair.

    Depends on H only through its value at s.

    Raises:
        KernelSpecError: non-finite inputs or h_at_s outside (0, 1)
    """
    return float(kernel_weights(spec, s, t, h_at_s))


def astar_remainder(spec: KernelSpec, s: float, t: float, h_at_s: float) -> float:
    """g_s(t) - sigma_s (t - s)^(h - 1/2) for 0 < t - s < 1."""
    if not 0.0 < t - s < 1.0:
        raise KernelSpecError(f"astar_remainder needs 0 < t - s < 1, got t - s = {t - s}")
    leading = float(spec.sigma_at(s)) * (t - s) ** (h_at_s - 0.5)
    return eval_kernel(spec, s, t, h_at_s) - leading


def truncation_horizon(
    bounds: ConditionABounds,
    h_step: float,
    tol: float,
    cap: float = MAX_HORIZON
) -> float:
    """
    Length M of driver history needed before the first output time.

    Smallest M >= 1 with h_step^2 L^2 M^(1 - 2R) / (2R - 1) <= tol^2, where
    h_step is the largest lag between two times the caller compares.

    Raises:
        TruncationError: if M exceeds cap
    """
    if not (h_step > 0.0 and tol > 0.0):
        raise ValueError(f"h_step and tol must be positive, got {h_step}, {tol}")
    decay = 2.0 * bounds.r_lower - 1.0
    log_m = (2.0 * math.log(h_step) + 2.0 * math.log(bounds.l_bar) - math.log(decay)
             - 2.0 * math.log(tol)) / decay
    if log_m > math.log(cap):
        raise TruncationError(
            f"truncation horizon exp({log_m:.1f}) exceeds {cap:g}; "
            f"raise the tolerance or set an explicit horizon"
        )
    return max(1.0, math.exp(log_m))


@dataclass
class ConditionACheck:
    """Worst observed/declared ratios of the Condition-A bounds; all <= 1 means they hold."""
    family: str
    h: float
    near_derivative: float
    far_derivative: float
    value: float
    remainder: float

    @property
    def passed(self) -> bool:
        return max(self.near_derivative, self.far_derivative, self.value, self.remainder) <= 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family, 'h': self.h,
            'near_derivative': self.near_derivative, 'far_derivative': self.far_derivative,
            'value': self.value, 'remainder': self.remainder, 'passed': self.passed
        }


def check_condition_a(spec: KernelSpec, h: float) -> ConditionACheck:
    """
    Verify the declared bounds of spec at Hurst level h.

    The derivative is a central finite difference of the profile (relative
    step 1e-5), so the analytic derivative used by default_bounds is checked
    independently.
    """
    if not 0.0 < h < 1.0:
        raise KernelSpecError(f"h must lie in (0, 1), got {h}")
    family = spec.family
    bounds = spec.bounds

    def finite_difference(x, a):
        step = FD_RELATIVE_STEP * x
        return (family.profile(x + step, a) - family.profile(x - step, a)) / (2.0 * step)

    ratios = _bound_ratios(family, h, bounds.r_lower, bounds.rho, derivative=finite_difference)
    scale = spec.sigma_max / bounds.l_bar
    return ConditionACheck(family=family.name, h=float(h),
                           **{key: value * scale for key, value in ratios.items()})
