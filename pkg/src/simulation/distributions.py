"""
Distributions over Hurst values and volatility levels.

Used both to draw per-path constant Hurst exponents and to take the
expectations in the stationary and local covariance formulas. Finite
distributions are summed exactly; the others are sampled.
"""

from abc import ABC, abstractmethod
from typing import Dict, Any, Sequence, Tuple, Union

import numpy as np


class Distribution(ABC):
    """A real-valued distribution."""

    is_finite: bool = False

    @abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n values."""
        pass

    @abstractmethod
    def support(self) -> Tuple[float, float]:
        """Smallest closed interval containing the support."""
        pass

    def atoms(self) -> Tuple[np.ndarray, np.ndarray]:
        """Values and weights of a finite distribution."""
        raise TypeError(f"{type(self).__name__} has no finite set of atoms")

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass


class FiniteMixture(Distribution):
    """Finitely many atoms with probabilities."""

    is_finite = True

    def __init__(self, values: Sequence[float], weights: Sequence[float] = None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("a finite distribution needs at least one value")
        if weights is None:
            weights = np.full(values.size, 1.0 / values.size)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != values.shape:
            raise ValueError("values and weights must have the same length")
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-9):
            raise ValueError(f"weights must be nonnegative and sum to 1, got {weights.tolist()}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        self.values = values
        self.weights = weights

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        index = rng.choice(self.values.size, size=n, p=self.weights)
        return self.values[index]

    def support(self) -> Tuple[float, float]:
        return float(self.values.min()), float(self.values.max())

    def atoms(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.values, self.weights

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'finite', 'values': self.values.tolist(), 'weights': self.weights.tolist()}


class PointMass(FiniteMixture):
    """All mass at a single value."""

    def __init__(self, value: float):
        super().__init__([value], [1.0])
        self.value = float(value)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'point', 'value': self.value}


class EmpiricalDistribution(FiniteMixture):
    """Equal weights on a set of Monte Carlo samples."""

    def __init__(self, samples: Sequence[float]):
        super().__init__(samples)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'empirical', 'n_samples': int(self.values.size)}


class UniformDistribution(Distribution):
    """Uniform law on [low, high]."""

    def __init__(self, low: float, high: float):
        if not low < high:
            raise ValueError(f"need low < high, got [{low}, {high}]")
        self.low = float(low)
        self.high = float(high)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=n)

    def support(self) -> Tuple[float, float]:
        return self.low, self.high

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'uniform', 'low': self.low, 'high': self.high}


def as_distribution(value: Union[float, Distribution]) -> Distribution:
    """Promote a plain number to a point mass."""
    if isinstance(value, Distribution):
        return value
    return PointMass(float(value))


def distribution_from_dict(data: Dict[str, Any]) -> Distribution:
    """
    Build a distribution from its JSON form.

    Accepted kinds: point {value}, finite {values, weights}, uniform {low, high}.
    """
    kind = data.get('kind')
    if kind == 'point':
        return PointMass(data['value'])
    if kind == 'finite':
        return FiniteMixture(data['values'], data.get('weights'))
    if kind == 'uniform':
        return UniformDistribution(data['low'], data['high'])
    raise ValueError(f"unknown distribution kind: {kind!r}")
