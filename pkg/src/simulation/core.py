"""
Core Types for Multifractional Process Simulation

Uniform grids, the Brownian driver on an extended grid, reproducible random
streams and the sampled path container shared by every other module.

Random streams are keyed by (seed, stream_id, domain) through a counter-based
Philox generator, so that the order in which paths are produced (or the
number of worker threads producing them) never changes a single bit.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

# Stream domains: for equal (seed, stream_id) these give independent streams
DOMAIN_DRIVER = 0        # Brownian driver W
DOMAIN_HURST = 1         # fBm driving a random Hurst path
DOMAIN_FBM = 2           # exact fBm oracle paths
DOMAIN_HURST_DRAW = 3    # per-path constant Hurst draws
DOMAIN_EXPECTATION = 4   # Monte Carlo expectations over distributions
DOMAIN_DRIVER_TAIL = 5   # driver increments over the far-past cells
DOMAIN_HURST_TAIL = 6    # Hurst driver on the far-past cells

UINT64_MAX = (1 << 64) - 1


class MultifracError(Exception):
    """Base class for all errors raised by this package."""


class GridError(MultifracError, ValueError):
    """Invalid grid, or a grid that does not match what an operation needs."""


class HurstSpecError(MultifracError, ValueError):
    """Hurst specification with parameters out of range."""


class KernelSpecError(MultifracError, ValueError):
    """Invalid kernel parameters or non-finite kernel inputs."""


class TruncationError(MultifracError, ValueError):
    """Truncation horizon too large, or a driver grid that stops short of it."""


class RemovableSingularityError(MultifracError, ArithmeticError):
    """Covariance evaluated at a removable singularity without the limit path."""


class EmbeddingError(MultifracError, ArithmeticError):
    """Circulant embedding and its Cholesky fallback both failed."""


def _check_uint64(value: int, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0 or value > UINT64_MAX:
        raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")
    return value


def rng_for(seed: int, stream_id: int = 0, domain: int = DOMAIN_DRIVER) -> np.random.Generator:
    """
    Build the random generator for one (seed, stream_id, domain) triple.

    Args:
        seed: 64-bit unsigned master seed
        stream_id: 64-bit unsigned stream (path) index
        domain: one of the DOMAIN_* constants

    Returns:
        A numpy Generator backed by Philox
    """
    seed = _check_uint64(seed, 'seed')
    stream_id = _check_uint64(stream_id, 'stream_id')
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id, int(domain)))
    return np.random.Generator(np.random.Philox(sequence))


def _freeze(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class UniformGrid:
    """Uniform partition of [t_min, t_max] into n_cells cells."""
    t_min: float
    t_max: float
    n_cells: int

    def __post_init__(self):
        if isinstance(self.n_cells, bool) or not isinstance(self.n_cells, (int, np.integer)):
            raise GridError(f"n_cells must be an integer, got {self.n_cells!r}")
        if self.n_cells < 1:
            raise GridError(f"n_cells must be >= 1, got {self.n_cells}")
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise GridError("grid end points must be finite")
        if self.t_min >= self.t_max:
            raise GridError(f"t_min ({self.t_min}) must be < t_max ({self.t_max})")
        object.__setattr__(self, 't_min', float(self.t_min))
        object.__setattr__(self, 't_max', float(self.t_max))
        object.__setattr__(self, 'n_cells', int(self.n_cells))

    @property
    def step(self) -> float:
        return (self.t_max - self.t_min) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    def node(self, k: int) -> float:
        return self.t_min + k * self.step

    def nodes(self) -> np.ndarray:
        return self.t_min + np.arange(self.n_nodes) * self.step

    def node_index(self, t: float, tol: float = 1e-7) -> int:
        """
        Index of the node at time t.

        Raises:
            GridError: if t is outside the grid or not within tol*step of a node
        """
        position = (t - self.t_min) / self.step
        k = int(round(position))
        if k < 0 or k > self.n_cells or abs(position - k) > tol:
            raise GridError(f"time {t} is not a node of {self}")
        return k

    def refine(self, factor: int) -> 'UniformGrid':
        return UniformGrid(self.t_min, self.t_max, self.n_cells * int(factor))

    def contains(self, other: 'UniformGrid', tol: float = 1e-9) -> bool:
        slack = tol * max(self.step, other.step)
        return self.t_min <= other.t_min + slack and other.t_max <= self.t_max + slack

    def to_dict(self) -> Dict[str, Any]:
        return {'t_min': self.t_min, 't_max': self.t_max, 'n_cells': self.n_cells}


@dataclass(frozen=True)
class SampledPath:
    """Values of a process on the nodes of a uniform grid."""
    grid: UniformGrid
    values: np.ndarray
    label: str = ''

    def __post_init__(self):
        values = _freeze(self.values)
        if values.ndim != 1 or values.shape[0] != self.grid.n_nodes:
            raise GridError(
                f"path '{self.label}' has {values.size} values for {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"path '{self.label}' contains non-finite values")
        object.__setattr__(self, 'values', values)

    def at(self, times: Union[float, Sequence[float], np.ndarray]) -> Union[float, np.ndarray]:
        """
        Left-constant lookup: the value at the last node not after each time.

        Args:
            times: scalar or array of times inside the grid

        Returns:
            Scalar or array of values
        """
        t = np.asarray(times, dtype=float)
        grid = self.grid
        slack = 1e-9 * grid.step
        if np.any(t < grid.t_min - slack) or np.any(t > grid.t_max + slack):
            raise GridError(f"times outside [{grid.t_min}, {grid.t_max}] for path '{self.label}'")
        index = np.floor((t - grid.t_min) / grid.step + 1e-9).astype(int)
        index = np.clip(index, 0, grid.n_cells)
        result = self.values[index]
        return float(result) if result.ndim == 0 else result

    def to_rows(self) -> List[List[float]]:
        return [[float(t), float(v)] for t, v in zip(self.grid.nodes(), self.values)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'label': self.label,
            'grid': self.grid.to_dict(),
            'values': self.values.tolist()
        }


@dataclass(frozen=True)
class NoiseGrid:
    """
    Brownian increments over the cells of a driver grid.

    far holds the increments over the far-past cells before the grid, one
    per cell width passed to make_noise; it is empty for a purely uniform
    driver.
    """
    grid: UniformGrid
    increments: np.ndarray
    seed: int
    stream_id: int
    far: np.ndarray = field(default_factory=lambda: np.zeros(0), compare=False)

    def __post_init__(self):
        increments = _freeze(self.increments)
        if increments.shape != (self.grid.n_cells,):
            raise GridError(
                f"noise has {increments.size} increments for {self.grid.n_cells} cells"
            )
        object.__setattr__(self, 'increments', increments)
        object.__setattr__(self, 'far', _freeze(np.ravel(self.far)))


def make_noise(
    seed: int,
    stream_id: int,
    grid: UniformGrid,
    far_widths: Optional[Sequence[float]] = None
) -> NoiseGrid:
    """
    Draw i.i.d. Normal(0, step) increments of the driver W on a grid.

    Args:
        seed: master seed
        stream_id: path index
        grid: driver grid, typically [-M, T]
        far_widths: widths of far-past cells before the grid, if any

    Returns:
        NoiseGrid, bit-identical for identical (seed, stream_id, grid); the
        far increments come from their own stream domain, so adding far
        cells leaves the uniform increments unchanged
    """
    if not isinstance(grid, UniformGrid):
        raise GridError(f"expected a UniformGrid, got {type(grid).__name__}")
    rng = rng_for(seed, stream_id, DOMAIN_DRIVER)
    increments = rng.standard_normal(grid.n_cells) * math.sqrt(grid.step)
    far = np.zeros(0)
    if far_widths is not None and len(far_widths) > 0:
        widths = np.asarray(far_widths, dtype=float)
        if np.any(widths <= 0.0):
            raise GridError("far-past cell widths must be positive")
        far = rng_for(seed, stream_id, DOMAIN_DRIVER_TAIL).standard_normal(widths.size) * np.sqrt(widths)
    return NoiseGrid(grid=grid, increments=increments, seed=int(seed), stream_id=int(stream_id), far=far)


def cumulate(noise: NoiseGrid) -> SampledPath:
    """Realize W on the driver grid: W(node 0) = 0, then running sums."""
    values = np.empty(noise.grid.n_nodes)
    values[0] = 0.0
    np.cumsum(noise.increments, out=values[1:])
    return SampledPath(
        grid=noise.grid,
        values=values,
        label=f"W[seed={noise.seed},stream={noise.stream_id}]"
    )
