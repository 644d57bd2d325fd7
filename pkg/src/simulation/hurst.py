"""
Functional Hurst Parameter Generators

Builds sampled Hurst paths H_t on a uniform grid from a HurstSpec:

- constant(h)
- deterministic_function(times, values), piecewise linear
- step(levels, breakpoints), right-continuous at every breakpoint
- tanh_of_fbm(center, amplitude, driver_hurst), random and rough
- stationary_constant_per_path(distribution), one random level per path

Every HurstPath carries its lower/upper bounds and a declared modulus of
continuity, both checked on construction. A path may also carry values at
far-past times before its grid (the tail), which the moving-average driver
reads on its geometric far cells.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Any, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .core import (
    DOMAIN_EXPECTATION, DOMAIN_HURST, DOMAIN_HURST_DRAW, DOMAIN_HURST_TAIL, GridError,
    HurstSpecError, SampledPath, UniformGrid, rng_for
)
from .distributions import (
    Distribution, EmpiricalDistribution, PointMass, distribution_from_dict
)
from .gaussian import exact_fbm

logger = logging.getLogger(__name__)

VARIANTS = (
    'constant', 'deterministic_function', 'step', 'tanh_of_fbm', 'stationary_constant_per_path'
)
MODULUS_KINDS = ('holder', 'lipschitz', 'none')

# Slack for floating-point comparisons of Hurst values
VALUE_TOL = 1e-12
# Nodes of the sampled fBm the far-past tail is conditioned on
TAIL_ANCHORS = 24


@dataclass(frozen=True)
class Modulus:
    """Declared modulus of continuity omega(h) = constant * h^exponent."""
    kind: str = 'none'
    exponent: float = 1.0
    constant: float = 0.0

    def __post_init__(self):
        if self.kind not in MODULUS_KINDS:
            raise HurstSpecError(f"modulus kind must be one of {MODULUS_KINDS}, got {self.kind!r}")
        if self.kind == 'lipschitz' and self.exponent != 1.0:
            raise HurstSpecError("a lipschitz modulus has exponent 1")
        if self.kind == 'holder' and not 0.0 < self.exponent <= 1.0:
            raise HurstSpecError(f"holder exponent must lie in (0, 1], got {self.exponent}")
        if self.constant < 0.0:
            raise HurstSpecError("modulus constant must be nonnegative")

    def bound(self, h: float) -> float:
        if self.kind == 'none':
            return math.inf
        return self.constant * h ** self.exponent

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'exponent': self.exponent, 'constant': self.constant}


@dataclass(frozen=True)
class HurstPath:
    """
    A sampled Hurst path with its bounds and continuity metadata.

    Attributes:
        path: values of H on the grid, all in (0, 1)
        h_lower, h_upper: bounds with 0 < h_lower <= H <= h_upper < 1
        modulus: declared modulus, verified on neighbouring nodes
        continuous: False only for step paths
        breakpoints: jump times of a step path
        tail_times: increasing far-past times before the grid, or None
        tail_values: H at tail_times
    """
    path: SampledPath
    h_lower: float
    h_upper: float
    modulus: Modulus = field(default_factory=Modulus)
    continuous: bool = True
    breakpoints: Tuple[float, ...] = ()
    tail_times: Optional[np.ndarray] = field(default=None, compare=False)
    tail_values: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        values = self.path.values
        if not 0.0 < self.h_lower <= self.h_upper < 1.0:
            raise HurstSpecError(f"need 0 < h_lower <= h_upper < 1, got [{self.h_lower}, {self.h_upper}]")
        if values.min() < self.h_lower - VALUE_TOL or values.max() > self.h_upper + VALUE_TOL:
            raise HurstSpecError(
                f"Hurst values [{values.min()}, {values.max()}] leave [{self.h_lower}, {self.h_upper}]"
            )
        self._check_tail()
        if self.modulus.kind != 'none' and values.size > 1:
            worst = float(np.max(np.abs(np.diff(values))))
            allowed = self.modulus.bound(self.path.grid.step)
            if worst > allowed + 1e-9:
                raise HurstSpecError(f"Hurst path increment {worst} exceeds its modulus bound {allowed}")
        if not self.continuous and not self.breakpoints:
            raise HurstSpecError("only step paths may be discontinuous")
        object.__setattr__(self, 'breakpoints', tuple(float(b) for b in self.breakpoints))

    def _check_tail(self):
        if self.tail_times is None and self.tail_values is None:
            return
        if self.tail_times is None or self.tail_values is None:
            raise HurstSpecError("tail_times and tail_values must be given together")
        times = np.array(self.tail_times, dtype=float).ravel()
        values = np.array(self.tail_values, dtype=float).ravel()
        if times.shape != values.shape:
            raise HurstSpecError(f"{times.size} tail times for {values.size} tail values")
        if times.size:
            if np.any(np.diff(times) <= 0.0) or times[-1] >= self.grid.t_min:
                raise GridError("tail times must increase and end before the grid")
            if values.min() < self.h_lower - VALUE_TOL or values.max() > self.h_upper + VALUE_TOL:
                raise HurstSpecError(f"tail values leave [{self.h_lower}, {self.h_upper}]")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, 'tail_times', times)
        object.__setattr__(self, 'tail_values', values)

    @property
    def grid(self) -> UniformGrid:
        return self.path.grid

    @property
    def values(self) -> np.ndarray:
        return self.path.values

    def at(self, times):
        return self.path.at(times)

    def tail_at(self, times) -> np.ndarray:
        """
        H at far-past times before the grid.

        Returns the sampled tail when it was drawn at exactly these times;
        a path without a tail holds its earliest value.

        Raises:
            GridError: the path carries a tail at other times
        """
        times = np.asarray(times, dtype=float)
        if self.tail_times is None:
            return np.full(times.shape, self.values[0])
        if self.tail_times.shape != times.shape or not np.allclose(self.tail_times, times, rtol=1e-12, atol=0.0):
            raise GridError("Hurst tail was sampled at other far-past times")
        return self.tail_values

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'h_lower': self.h_lower,
            'h_upper': self.h_upper,
            'modulus': self.modulus.to_dict(),
            'continuous': self.continuous,
            'breakpoints': list(self.breakpoints),
            'path': self.path.to_dict()
        }
        if self.tail_times is not None:
            data['tail'] = {'times': self.tail_times.tolist(), 'values': self.tail_values.tolist()}
        return data


def _check_level(value: float, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise HurstSpecError(f"{name} must be a number, got {value!r}")
    if not 0.0 < value < 1.0:
        raise HurstSpecError(f"{name} must lie in (0, 1), got {value}")
    return value


@dataclass(frozen=True)
class HurstSpec:
    """
    Description of a Hurst generator; build one with the classmethods.

    Example:
        >>> spec = HurstSpec.tanh_of_fbm(0.9, 0.05, 0.2)
        >>> spec.is_deterministic
        False
    """
    variant: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise HurstSpecError(f"unknown Hurst variant {self.variant!r}; expected one of {VARIANTS}")

    @classmethod
    def constant(cls, h: float) -> 'HurstSpec':
        return cls('constant', {'value': _check_level(h, 'value')})

    @classmethod
    def deterministic_function(cls, times: Sequence[float], values: Sequence[float]) -> 'HurstSpec':
        times = [float(t) for t in times]
        values = [_check_level(v, 'table value') for v in values]
        if not times or len(times) != len(values):
            raise HurstSpecError("table needs matching, nonempty times and values")
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise HurstSpecError("table times must be strictly increasing")
        return cls('deterministic_function', {'times': times, 'values': values})

    @classmethod
    def step(cls, levels: Sequence[float], breakpoints: Sequence[float]) -> 'HurstSpec':
        levels = [_check_level(v, 'level') for v in levels]
        breakpoints = [float(b) for b in breakpoints]
        if len(levels) != len(breakpoints) + 1:
            raise HurstSpecError("a step spec needs exactly one more level than breakpoints")
        if any(b <= a for a, b in zip(breakpoints[:-1], breakpoints[1:])):
            raise HurstSpecError("breakpoints must be strictly increasing")
        return cls('step', {'levels': levels, 'breakpoints': breakpoints})

    @classmethod
    def tanh_of_fbm(
        cls,
        center: float,
        amplitude: float,
        driver_hurst: float,
        driver_seed: Optional[int] = None
    ) -> 'HurstSpec':
        """H_t = center + amplitude * tanh(B_t) with B a standard fBm (B_0 = 0)."""
        center = float(center)
        amplitude = float(amplitude)
        if amplitude <= 0.0:
            raise HurstSpecError(f"amplitude must be positive, got {amplitude}")
        if not (0.0 < center - amplitude and center + amplitude < 1.0):
            raise HurstSpecError(
                f"center +/- amplitude = [{center - amplitude}, {center + amplitude}] leaves (0, 1)"
            )
        params = {
            'center': center,
            'amplitude': amplitude,
            'driver_hurst': _check_level(driver_hurst, 'driver_hurst'),
            'driver_seed': None if driver_seed is None else int(driver_seed)
        }
        return cls('tanh_of_fbm', params)

    @classmethod
    def stationary_constant_per_path(cls, distribution: Distribution) -> 'HurstSpec':
        low, high = distribution.support()
        if not 0.0 < low <= high < 1.0:
            raise HurstSpecError(f"Hurst distribution support [{low}, {high}] leaves (0, 1)")
        return cls('stationary_constant_per_path', {'distribution': distribution})

    @property
    def is_deterministic(self) -> bool:
        return self.variant in ('constant', 'deterministic_function', 'step')

    def bounds(self) -> Tuple[float, float]:
        """Condition-B bounds (h_lower, h_upper) implied by the parameters."""
        p = self.params
        if self.variant == 'constant':
            return p['value'], p['value']
        if self.variant == 'deterministic_function':
            return min(p['values']), max(p['values'])
        if self.variant == 'step':
            return min(p['levels']), max(p['levels'])
        if self.variant == 'tanh_of_fbm':
            return p['center'] - p['amplitude'], p['center'] + p['amplitude']
        return p['distribution'].support()

    def value_at(self, times) -> np.ndarray:
        """H at the given times for a deterministic spec."""
        t = np.asarray(times, dtype=float)
        p = self.params
        if self.variant == 'constant':
            return np.full(t.shape, p['value'])
        if self.variant == 'deterministic_function':
            return np.interp(t, p['times'], p['values'])
        if self.variant == 'step':
            index = np.searchsorted(np.asarray(p['breakpoints']), t, side='right')
            return np.asarray(p['levels'])[index]
        raise HurstSpecError(f"{self.variant} is random; use generate_hurst or hurst_marginal")

    def to_dict(self) -> Dict[str, Any]:
        data = {'variant': self.variant}
        for key, value in self.params.items():
            data[key] = value.to_dict() if isinstance(value, Distribution) else value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'HurstSpec':
        """Inverse of to_dict; raises HurstSpecError on missing or unknown keys."""
        data = dict(data)
        variant = data.pop('variant', None)
        builders = {
            'constant': (lambda value: cls.constant(value), ('value',), ()),
            'deterministic_function': (cls.deterministic_function, ('times', 'values'), ()),
            'step': (cls.step, ('levels', 'breakpoints'), ()),
            'tanh_of_fbm': (cls.tanh_of_fbm, ('center', 'amplitude', 'driver_hurst'), ('driver_seed',)),
            'stationary_constant_per_path': (cls.stationary_constant_per_path, ('distribution',), ()),
        }
        if variant not in builders:
            raise HurstSpecError(f"unknown Hurst variant {variant!r}; expected one of {VARIANTS}")
        builder, required, optional = builders[variant]
        missing = [key for key in required if key not in data]
        unknown = [key for key in data if key not in required + optional]
        if missing or unknown:
            raise HurstSpecError(f"hurst '{variant}': missing keys {missing}, unknown keys {unknown}")
        if variant == 'stationary_constant_per_path':
            try:
                data['distribution'] = distribution_from_dict(data['distribution'])
            except (KeyError, TypeError, ValueError) as e:
                raise HurstSpecError(f"invalid Hurst distribution: {e}")
        return builder(**data)


def _lattice_offset(grid: UniformGrid) -> int:
    position = grid.t_min / grid.step
    k0 = int(round(position))
    if abs(position - k0) > 1e-7:
        raise GridError(f"t = 0 is not on the lattice of {grid}; cannot anchor the Hurst driver")
    return k0


def anchored_fbm(h: float, grid: UniformGrid, seed: int, stream_id: int) -> np.ndarray:
    """
    Standard fBm on any grid whose lattice contains 0, pinned to B_0 = 0.

    Samples one exact path over the lattice hull of the grid and 0, then
    subtracts its value at time 0 (stationary increments make this an fBm).
    """
    k0 = _lattice_offset(grid)
    low = min(k0, 0)
    high = max(k0 + grid.n_cells, 0)
    full = UniformGrid(0.0, (high - low) * grid.step, high - low)
    values = exact_fbm(h, full, seed, stream_id, normalization='standard', domain=DOMAIN_HURST).values
    start = k0 - low
    return values[start:start + grid.n_nodes] - values[-low]


def _normalized_fbm_cov(x: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    """Correlation of a standard fBm pinned at 0 between nonzero times x_i and y_j."""
    lx = np.log(np.abs(x))[:, None]
    ly = np.log(np.abs(y))[None, :]
    gap = np.abs(x[:, None] - y[None, :])
    safe = np.where(gap > 0.0, gap, 1.0)
    cross = np.where(gap > 0.0, np.exp(h * (2.0 * np.log(safe) - lx - ly)), 0.0)
    return 0.5 * (np.exp(h * (lx - ly)) + np.exp(h * (ly - lx)) - cross)


@lru_cache(maxsize=8)
def _tail_conditioning(h: float, anchors: Tuple[float, ...], tail: Tuple[float, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Regression on the anchors and square root of the conditional covariance.

    Both act on fBm values divided by |t|^h, which keeps the far-past
    covariances (|t| up to 1e200) in floating-point range.
    """
    anchor_times = np.asarray(anchors)
    tail_times = np.asarray(tail)
    cov = _normalized_fbm_cov(tail_times, tail_times, h)
    regression = np.zeros((tail_times.size, anchor_times.size))
    if anchor_times.size:
        cross = _normalized_fbm_cov(anchor_times, tail_times, h)
        regression = (scipy.linalg.pinvh(_normalized_fbm_cov(anchor_times, anchor_times, h)) @ cross).T
        cov = cov - regression @ cross
    eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (cov + cov.T))
    root = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    regression.setflags(write=False)
    root.setflags(write=False)
    return regression, root


def fbm_tail(
    h: float,
    grid: UniformGrid,
    values: np.ndarray,
    tail_times: np.ndarray,
    rng: np.random.Generator
) -> np.ndarray:
    """
    Standard fBm pinned at 0 on far-past times, given its values on grid.

    Conditions exactly on TAIL_ANCHORS grid nodes, spaced geometrically
    from the left end of the grid where the tail joins it.
    """
    tail_times = np.asarray(tail_times, dtype=float)
    if tail_times.size == 0:
        return np.zeros(0)
    nodes = grid.nodes()
    index = np.unique(np.round(np.geomspace(1, grid.n_nodes, TAIL_ANCHORS)).astype(np.int64)) - 1
    index = index[np.abs(nodes[index]) > 1e-9 * grid.step]
    anchors = nodes[index]
    regression, root = _tail_conditioning(float(h), tuple(anchors.tolist()), tuple(tail_times.tolist()))
    scaled = values[index] * np.exp(-h * np.log(np.abs(anchors)))
    z = regression @ scaled + root @ rng.standard_normal(tail_times.size)
    return z * np.exp(h * np.log(np.abs(tail_times)))


def generate_hurst(
    spec: HurstSpec,
    grid: UniformGrid,
    seed: int,
    stream_id: int = 0,
    tail_times: Optional[Sequence[float]] = None
) -> HurstPath:
    """
    Sample the Hurst path described by spec on grid.

    Args:
        spec: Hurst specification
        grid: grid to sample on (usually the driver grid [-M, T])
        seed: master seed (tanh_of_fbm uses driver_seed instead when set)
        stream_id: path index
        tail_times: increasing far-past times before the grid where H is
            also needed; the tail of tanh_of_fbm is drawn jointly with the
            grid values

    Returns:
        HurstPath whose invariants hold; random variants draw from their own
        stream domains, so H is independent of the driver W
    """
    nodes = grid.nodes()
    p = spec.params
    h_lower, h_upper = spec.bounds()
    label = f"H[{spec.variant}]"
    tail = None if tail_times is None else np.asarray(tail_times, dtype=float)

    def build(values, tail_values, modulus, **extra) -> HurstPath:
        return HurstPath(SampledPath(grid, values, label), h_lower, h_upper, modulus,
                         tail_times=tail, tail_values=None if tail is None else tail_values, **extra)

    if spec.variant in ('constant', 'deterministic_function'):
        values = spec.value_at(nodes)
        tail_values = None if tail is None else spec.value_at(tail)
        if spec.variant == 'constant':
            return build(values, tail_values, Modulus('lipschitz', 1.0, 0.0))
        slopes = np.abs(np.diff(p['values'])) / np.diff(p['times']) if len(p['times']) > 1 else [0.0]
        return build(values, tail_values, Modulus('lipschitz', 1.0, float(np.max(slopes))))

    if spec.variant == 'step':
        # nudge so a node sitting on a breakpoint takes the right-limit value
        values = spec.value_at(nodes + 1e-9 * grid.step)
        tail_values = None if tail is None else spec.value_at(tail + 1e-9 * grid.step)
        return build(values, tail_values, Modulus('none'),
                     continuous=False, breakpoints=tuple(p['breakpoints']))

    if spec.variant == 'tanh_of_fbm':
        driver_seed = seed if p['driver_seed'] is None else p['driver_seed']
        driver = anchored_fbm(p['driver_hurst'], grid, driver_seed, stream_id)
        values = p['center'] + p['amplitude'] * np.tanh(driver)
        tail_values = None
        if tail is not None:
            rng = rng_for(driver_seed, stream_id, DOMAIN_HURST_TAIL)
            far = fbm_tail(p['driver_hurst'], grid, driver, tail, rng)
            tail_values = p['center'] + p['amplitude'] * np.tanh(far)
        return build(values, tail_values, Modulus('none'))

    rng = rng_for(seed, stream_id, DOMAIN_HURST_DRAW)
    level = float(p['distribution'].sample(rng, 1)[0])
    logger.debug("stream %d drew constant Hurst level %s", stream_id, level)
    return build(np.full(grid.n_nodes, level), None if tail is None else np.full(tail.shape, level),
                 Modulus('lipschitz', 1.0, 0.0))


def lsc_variant(h: HurstPath) -> HurstPath:
    """
    Lower semicontinuous version H* of a Hurst path on its grid.

    Continuous paths are returned unchanged. H* differs from H only at the
    breakpoints themselves, so a node sitting on a breakpoint (within 1e-7
    cells) takes the smaller of its value and the value of the node before
    it; breakpoints between nodes leave the sampled path as it is. Nodes
    are processed left to right in place, which makes the operation
    idempotent.
    """
    if h.continuous:
        return h
    grid = h.grid
    values = h.values.copy()
    for b in h.breakpoints:
        position = (b - grid.t_min) / grid.step
        k = int(round(position))
        if abs(position - k) <= 1e-7 and 0 < k <= grid.n_cells:
            values[k] = min(values[k - 1], values[k])
    path = SampledPath(grid, values, h.path.label + '*')
    return HurstPath(path, h.h_lower, h.h_upper, h.modulus, h.continuous, h.breakpoints,
                     h.tail_times, h.tail_values)


def hurst_marginal(spec: HurstSpec, t: float, n_samples: int = 20_000, seed: int = 0) -> Distribution:
    """
    Law of H_t induced by a spec.

    Deterministic specs give a point mass, per-path constant specs give their
    own distribution. For tanh_of_fbm, B_t ~ Normal(0, |t|^(2 driver_hurst)),
    so the law is sampled directly from that Gaussian.
    """
    if spec.is_deterministic:
        return PointMass(float(spec.value_at(t)))
    p = spec.params
    if spec.variant == 'stationary_constant_per_path':
        return p['distribution']
    rng = rng_for(seed, 0, DOMAIN_EXPECTATION)
    scale = abs(t) ** p['driver_hurst']
    samples = p['center'] + p['amplitude'] * np.tanh(scale * rng.standard_normal(n_samples))
    return EmpiricalDistribution(samples)
