"""
Run Configuration

A run is described by one JSON document:

    {
      "schema": 1,
      "seed": 42,
      "grid":     {"t_min": 0.0, "t_max": 1.0, "n_cells": 1024},
      "kernel":   {"family": "ito_mbm", "sigma": 1.0},
      "hurst":    {"variant": "constant", "value": 0.5},
      "sim":      {"substeps": 8, "tol_truncation": 0.001, ...},
      "analysis": {"rescale": {...}, "kc": {...}, ...}
    }

Every section is optional; missing keys take their DEFAULTS value and
unknown keys are rejected.
"""

import copy
import json
from dataclasses import dataclass, replace
from typing import Dict, Any

from simulation.core import HurstSpecError, KernelSpecError, MultifracError, UniformGrid
from simulation.hurst import HurstSpec
from simulation.kernels import FAMILIES, KernelSpec, create_kernel_spec
from simulation.moving_average import PROCESSES, SimConfig

SCHEMA_VERSION = 1

DEFAULTS: Dict[str, Any] = {
    'schema': SCHEMA_VERSION,
    'seed': 42,
    'grid': {'t_min': 0.0, 't_max': 1.0, 'n_cells': 1024},
    'kernel': {'family': 'ito_mbm', 'sigma': 1.0},
    'hurst': {'variant': 'constant', 'value': 0.5},
    'sim': {
        'substeps': 8,
        'tol_truncation': 1e-3,
        'singular_cell': 'variance_matched',
        'horizon': None,
        'max_lag': None,
        'process': 'moving_average',
        'n_paths': 1,
        'stream_id': 0,
    },
    'analysis': {
        'rescale': {
            't': 0.5,
            'h_values': [0.0625, 0.03125, 0.015625, 0.0078125],
            'pairs': [[1.0, 1.0], [1.0, -1.0], [2.0, 1.0]],
            'n_paths': 2000,
        },
        'kc': {
            'p': 4.0,
            'exponent': None,
            't_grid': [0.125, 0.375, 0.625],
            'h_grid': [0.0078125, 0.015625, 0.03125, 0.0625],
            'n_paths': 1000,
        },
        'holder': {
            'points': [0.25, 0.5, 0.75],
            'n_scales': 6,
            'window': 0.125,
            'tolerance': 0.07,
            'n_paths': 20,
        },
        'fig2': {'n_paths': 20},
        'stationary': {
            'distribution': {'kind': 'finite', 'values': [0.4, 0.6], 'weights': [0.5, 0.5]},
            'pairs': [[1.0, 1.0], [1.0, 2.0]],
            'deltas': [0, 1, 2],
            'n_paths': 2000,
        },
        'discontinuity': {
            'levels': [0.3, 0.7],
            'breakpoint': 0.5,
            'refinements': [64, 256, 1024],
            'n_paths': 100,
        },
    },
}

KERNEL_PARAMS = {'matern': ('lam',), 'truncated': ('cutoff',)}


class ConfigError(MultifracError, ValueError):
    """Invalid run configuration."""


def _merge_section(name: str, defaults: Dict[str, Any], given: Any) -> Dict[str, Any]:
    if not isinstance(given, dict):
        raise ConfigError(f"section '{name}' must be an object, got {type(given).__name__}")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {unknown}")
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(given))
    return merged


@dataclass(frozen=True)
class RunConfig:
    """
    Validated run configuration.

    Attributes:
        seed: master seed
        grid: output grid
        kernel: kernel section (family, sigma and family parameters)
        hurst: Hurst specification
        sim: discretization and sampling section
        analysis: per-suite verification parameters
    """
    seed: int
    grid: UniformGrid
    kernel: Dict[str, Any]
    hurst: HurstSpec
    sim: Dict[str, Any]
    analysis: Dict[str, Dict[str, Any]]

    def kernel_spec(self) -> KernelSpec:
        """KernelSpec with Condition-A bounds fitted to the Hurst range."""
        h_lower, h_upper = self.hurst.bounds()
        params = {k: v for k, v in self.kernel.items() if k not in ('family', 'sigma')}
        return create_kernel_spec(self.kernel['family'], self.kernel['sigma'], h_lower, h_upper, **params)

    def sim_config(self) -> SimConfig:
        return SimConfig(
            grid=self.grid,
            substeps=self.sim['substeps'],
            tol_truncation=self.sim['tol_truncation'],
            singular_cell=self.sim['singular_cell'],
            seed=self.seed,
            stream_id=self.sim['stream_id'],
            horizon=self.sim['horizon'],
            max_lag=self.sim['max_lag']
        )

    def with_seed(self, seed: int) -> 'RunConfig':
        return replace(self, seed=_check_seed(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema': SCHEMA_VERSION,
            'seed': self.seed,
            'grid': {'t_min': self.grid.t_min, 't_max': self.grid.t_max, 'n_cells': self.grid.n_cells},
            'kernel': dict(self.kernel),
            'hurst': self.hurst.to_dict(),
            'sim': dict(self.sim),
            'analysis': copy.deepcopy(self.analysis)
        }


def _check_seed(seed: Any) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return seed


def _parse_kernel(section: Dict[str, Any]) -> Dict[str, Any]:
    family = section.get('family', DEFAULTS['kernel']['family'])
    if family not in FAMILIES:
        raise ConfigError(f"unknown kernel family {family!r}; expected one of {sorted(FAMILIES)}")
    allowed = ('family', 'sigma') + KERNEL_PARAMS.get(family, ())
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in 'kernel' for family '{family}': {unknown}")
    kernel = {'family': family, 'sigma': float(section.get('sigma', DEFAULTS['kernel']['sigma']))}
    for key in KERNEL_PARAMS.get(family, ()):
        if key not in section:
            raise ConfigError(f"kernel family '{family}' needs '{key}'")
        kernel[key] = float(section[key])
    return kernel


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a configuration document and fill in defaults.

    Raises:
        ConfigError: wrong schema, unknown keys or invalid values
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown top-level keys: {unknown}")
    schema = data.get('schema', SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {schema!r}; this version reads schema {SCHEMA_VERSION}")

    seed = _check_seed(data.get('seed', DEFAULTS['seed']))
    grid_section = _merge_section('grid', DEFAULTS['grid'], data.get('grid', {}))
    sim = _merge_section('sim', DEFAULTS['sim'], data.get('sim', {}))
    if sim['process'] not in PROCESSES:
        raise ConfigError(f"sim.process must be one of {PROCESSES}, got {sim['process']!r}")
    if isinstance(sim['n_paths'], bool) or not isinstance(sim['n_paths'], int) or sim['n_paths'] < 1:
        raise ConfigError(f"sim.n_paths must be a positive integer, got {sim['n_paths']!r}")

    analysis_given = data.get('analysis', {})
    if not isinstance(analysis_given, dict):
        raise ConfigError("section 'analysis' must be an object")
    unknown = sorted(set(analysis_given) - set(DEFAULTS['analysis']))
    if unknown:
        raise ConfigError(f"unknown verification suites in 'analysis': {unknown}")
    analysis = {
        suite: _merge_section(f"analysis.{suite}", defaults, analysis_given.get(suite, {}))
        for suite, defaults in DEFAULTS['analysis'].items()
    }

    try:
        grid = UniformGrid(float(grid_section['t_min']), float(grid_section['t_max']),
                           int(grid_section['n_cells']))
        hurst = HurstSpec.from_dict(data.get('hurst', DEFAULTS['hurst']))
        config = RunConfig(
            seed=seed,
            grid=grid,
            kernel=_parse_kernel(data.get('kernel', {})),
            hurst=hurst,
            sim=sim,
            analysis=analysis
        )
        # Fail early on settings that would only break at simulation time
        config.sim_config()
        config.kernel_spec()
    except (HurstSpecError, KernelSpecError) as e:
        raise ConfigError(str(e))
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}")
    return config


def load_config(path: str) -> RunConfig:
    """Read and validate a JSON configuration file."""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}")
    return parse_config(data)


def default_config() -> RunConfig:
    return parse_config({})
