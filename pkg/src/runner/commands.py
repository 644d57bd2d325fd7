"""
Command Implementations

Each cmd_* function runs one CLI command and returns its exit code:

    0  success, or every tolerance passed
    1  a verification tolerance failed
    2  invalid configuration or parameters
    3  file I/O error

Results are printed with the usual banner layout; data goes to CSV files,
manifests and report summaries to JSON.
"""

import functools
import json
import logging
import os
import sys
from itertools import product
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

from analysis.contrast import (
    FIG2_HURST, FIG2_SETUP, discontinuity_check, fig2_contrast, stationary_covariance_check
)
from analysis.holder import holder_check
from analysis.moment_check import kc_moment_check
from analysis.rescaling import rescaling_test
from simulation.core import MultifracError, UniformGrid
from simulation.distributions import FiniteMixture, distribution_from_dict
from simulation.gaussian import (
    COVARIANCE_HEADER, CovarianceTable, fbm_cov, increment_autocov, local_cov_limit,
    mbm_cov, mbm_field_cov_quadrature, stationary_cov
)
from simulation.hurst import HurstSpec
from simulation.kernels import create_kernel_spec
from simulation.moving_average import SimConfig, simulate_paths

from .config import DEFAULTS, RunConfig, default_config, load_config
from .csv_io import write_json, write_rows

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3

SUITES = ('rescale', 'kc', 'holder', 'fig2', 'stationary', 'discontinuity')
FIGURES = ('fig1', 'fig2')
COVARIANCE_MODELS = ('fbm', 'mbm', 'stationary', 'increment', 'local-limit')

PATH_HEADER = ['t', 'value', 'H']
HURST_HEADER = ['t', 'H']

# Relative agreement required between mbm_cov and its quadrature oracle
QUADRATURE_RTOL = 1e-5

FIG1_LAMBDA = 4.0
FIG1_HURST = {'center': 0.5, 'amplitude': 0.3, 'driver_hurst': 0.5}
FIG1_SETUP = {'n_cells': 1024, 't_max': 1.0, 'substeps': 8}
REPRODUCTION_NOTE = (
    "Qualitative reproduction: the paths show the intended roughness and Hurst "
    "range for this seed, not one particular reference curve."
)

ConfigLike = Union[str, RunConfig, None]


def exit_codes(fn: Callable[..., int]) -> Callable[..., int]:
    """Map configuration errors to exit 2 and I/O errors to exit 3."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> int:
        try:
            return fn(*args, **kwargs)
        except OSError as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_IO
        except (MultifracError, ValueError) as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_CONFIG
    return wrapper


def resolve_config(config: ConfigLike, seed: Optional[int] = None) -> RunConfig:
    """A RunConfig from a path, an instance or None (defaults); seed overrides."""
    if config is None:
        run_config = default_config()
    elif isinstance(config, RunConfig):
        run_config = config
    else:
        run_config = load_config(config)
    return run_config if seed is None else run_config.with_seed(seed)


def _banner(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


@exit_codes
def cmd_simulate(
    config: ConfigLike,
    out: str,
    seed: Optional[int] = None,
    process: Optional[str] = None,
    n_paths: Optional[int] = None,
    threads: Optional[int] = None
) -> int:
    """
    Simulate paths and write them as CSV.

    Columns are t, value, H, plus path_id when more than one path is drawn.
    """
    run_config = resolve_config(config, seed)
    process = process or run_config.sim['process']
    n_paths = n_paths or run_config.sim['n_paths']

    _banner(f"Simulating {n_paths} {process} path(s)")
    kernel = run_config.kernel_spec()
    sample = simulate_paths(kernel, run_config.hurst, run_config.sim_config(), n_paths, process, threads)
    rows = sample.to_rows()
    header = PATH_HEADER + ['path_id']
    if n_paths == 1:
        rows = [row[:3] for row in rows]
        header = PATH_HEADER
    write_rows(out, header, rows)
    print(f"Kernel: {kernel.name}, Hurst: {run_config.hurst.variant}, seed {run_config.seed}")
    print(f"Wrote {len(rows)} rows to {out}")
    return EXIT_PASS


def _hurst_distribution(hurst: Sequence[float], weights: Optional[Sequence[float]]):
    if not hurst:
        raise ValueError("--H is required for this model")
    return FiniteMixture(list(hurst), list(weights) if weights else None)


def covariance_table(
    model: str,
    t_values: Sequence[float] = (),
    s_values: Sequence[float] = (),
    hurst: Sequence[float] = (),
    weights: Optional[Sequence[float]] = None,
    h_t: Optional[float] = None,
    h_s: Optional[float] = None,
    sigma: float = 1.0,
    deltas: Sequence[int] = (),
    allow_limit: bool = False,
    normalization: str = 'kernel'
) -> CovarianceTable:
    """
    Evaluate a covariance model over the cartesian product of its arguments.

    fbm, mbm and stationary use (t, s); local-limit reads t as r and s as v;
    increment evaluates one row per lag with s left empty.
    """
    if model not in COVARIANCE_MODELS:
        raise ValueError(f"model must be one of {COVARIANCE_MODELS}, got {model!r}")
    if model == 'increment':
        if not deltas:
            raise ValueError("--delta is required for the increment model")
        h_dist = _hurst_distribution(hurst, weights)
        values = [increment_autocov(int(d), h_dist, sigma) for d in deltas]
        return CovarianceTable([(int(d), None) for d in deltas], values, model)

    if not t_values or not s_values:
        raise ValueError(f"--t and --s are required for the {model} model")
    queries = [(float(t), float(s)) for t, s in product(t_values, s_values)]
    if model == 'fbm':
        if len(hurst) != 1:
            raise ValueError("fbm takes exactly one --H value")
        fn = functools.partial(fbm_cov, h=hurst[0], normalization=normalization)
    elif model == 'mbm':
        if h_t is None or h_s is None:
            raise ValueError("mbm needs --Ht and --Hs")
        fn = functools.partial(mbm_cov, h_t=h_t, h_s=h_s, allow_limit=allow_limit)
    elif model == 'stationary':
        fn = functools.partial(stationary_cov, h_dist=_hurst_distribution(hurst, weights), sigma_dist=sigma)
    else:
        fn = functools.partial(local_cov_limit, h_dist=_hurst_distribution(hurst, weights), sigma_dist=sigma)
    return CovarianceTable(queries, [fn(t, s) for t, s in queries], model)


@exit_codes
def cmd_covariance(
    model: str,
    out: Optional[str] = None,
    check: bool = False,
    **params
) -> int:
    """
    Print covariance values, optionally writing them as a CovarianceTable CSV.

    With check=True (mbm only) every value is compared with the quadrature
    oracle; a relative disagreement above QUADRATURE_RTOL exits 1.
    """
    table = covariance_table(model, **params)
    for (t, s), value in zip(table.queries, table.values):
        if len(table.values) == 1:
            print(value)
        else:
            print(f"{t}\t{'' if s is None else s}\t{value}")

    status = EXIT_PASS
    if check:
        if model != 'mbm':
            raise ValueError("--check is only available for the mbm model")
        for (t, s), value in zip(table.queries, table.values):
            oracle = mbm_field_cov_quadrature(t, s, params['h_t'], params['h_s'])
            rel = abs(value - oracle) / max(1.0, abs(oracle))
            print(f"quadrature({t}, {s}) = {oracle}  rel. diff {rel:.2e}")
            if rel > QUADRATURE_RTOL:
                status = EXIT_FAIL
    if out:
        write_rows(out, COVARIANCE_HEADER, table.to_rows())
    return status


def _verify_rescale(run_config: RunConfig, threads: Optional[int]):
    opts = run_config.analysis['rescale']
    return rescaling_test(
        run_config.kernel_spec(), run_config.hurst, run_config.sim_config(),
        t=opts['t'],
        h_values=opts['h_values'],
        rv_pairs=[tuple(pair) for pair in opts['pairs']],
        n_paths=opts['n_paths'],
        threads=threads
    )


def _verify_kc(run_config: RunConfig, threads: Optional[int]):
    opts = run_config.analysis['kc']
    grid = run_config.grid
    times = {t for t in opts['t_grid']} | {t + h for t in opts['t_grid'] for h in opts['h_grid']}
    nodes = sorted({grid.node_index(x) for x in times})
    process = run_config.sim['process']
    sample = simulate_paths(run_config.kernel_spec(), run_config.hurst, run_config.sim_config(),
                            opts['n_paths'], process, threads, nodes)
    return kc_moment_check(sample, opts['exponent'], opts['p'], opts['t_grid'], opts['h_grid'])


def _verify_holder(run_config: RunConfig, threads: Optional[int]):
    opts = run_config.analysis['holder']
    return holder_check(
        run_config.kernel_spec(), run_config.hurst, run_config.sim_config(),
        points=opts['points'],
        n_paths=opts['n_paths'],
        n_scales=opts['n_scales'],
        window=opts['window'],
        tolerance=opts['tolerance'],
        threads=threads
    )


def _verify_fig2(run_config: RunConfig, threads: Optional[int]):
    return fig2_contrast(n_paths=run_config.analysis['fig2']['n_paths'], seed=run_config.seed, threads=threads)


def _verify_stationary(run_config: RunConfig, threads: Optional[int]):
    opts = run_config.analysis['stationary']
    return stationary_covariance_check(
        h_dist=distribution_from_dict(opts['distribution']),
        pairs=[tuple(pair) for pair in opts['pairs']],
        deltas=opts['deltas'],
        n_paths=opts['n_paths'],
        seed=run_config.seed,
        threads=threads
    )


def _verify_discontinuity(run_config: RunConfig, threads: Optional[int]):
    opts = run_config.analysis['discontinuity']
    return discontinuity_check(
        hurst_levels=tuple(opts['levels']),
        breakpoint=opts['breakpoint'],
        refinements=opts['refinements'],
        n_paths=opts['n_paths'],
        seed=run_config.seed,
        threads=threads
    )


VERIFIERS = {
    'rescale': _verify_rescale,
    'kc': _verify_kc,
    'holder': _verify_holder,
    'fig2': _verify_fig2,
    'stationary': _verify_stationary,
    'discontinuity': _verify_discontinuity,
}


@exit_codes
def cmd_verify(
    suite: str,
    config: ConfigLike = None,
    out: str = 'results',
    seed: Optional[int] = None,
    threads: Optional[int] = None
) -> int:
    """
    Run one verification suite.

    Writes <out>/<suite>_report.csv (the report table) and
    <out>/<suite>_report.json (summary, verdict and the config used).

    Returns:
        0 when the report passes, 1 otherwise
    """
    if suite not in VERIFIERS:
        raise ValueError(f"suite must be one of {SUITES}, got {suite!r}")
    run_config = resolve_config(config, seed)

    _banner(f"Verification suite: {suite}")
    report = VERIFIERS[suite](run_config, threads)
    summary = report.to_dict()

    write_rows(os.path.join(out, f"{suite}_report.csv"), report.HEADER, report.to_rows())
    write_json(os.path.join(out, f"{suite}_report.json"), {
        'suite': suite,
        'report': summary,
        'config': run_config.to_dict()
    })

    print(json.dumps(summary, indent=2, default=str))
    print("\n" + "=" * 60)
    print(f"Result: {'PASS' if report.passed else 'FAIL'}")
    print("=" * 60)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _hurst_rows(times, hurst) -> List[List[Any]]:
    return [[float(t), float(h)] for t, h in zip(times, hurst)]


def _path_rows(times, values, hurst) -> List[List[Any]]:
    return [[float(t), float(x), float(h)] for t, x, h in zip(times, values, hurst)]


def _reproduce_fig1(out: str, seed: int, threads: Optional[int]) -> Dict[str, Any]:
    hurst_spec = HurstSpec.tanh_of_fbm(**FIG1_HURST)
    kernel = create_kernel_spec('matern', 1.0, *hurst_spec.bounds(), lam=FIG1_LAMBDA)
    grid = UniformGrid(0.0, FIG1_SETUP['t_max'], FIG1_SETUP['n_cells'])
    cfg = SimConfig(grid=grid, substeps=FIG1_SETUP['substeps'], seed=seed)
    sample = simulate_paths(kernel, hurst_spec, cfg, 1, 'moving_average', threads)

    times = sample.times
    files = {
        'matern_path.csv': write_rows(os.path.join(out, 'matern_path.csv'), PATH_HEADER,
                                      _path_rows(times, sample.values[0], sample.hurst[0])),
        'hurst_path.csv': write_rows(os.path.join(out, 'hurst_path.csv'), HURST_HEADER,
                                     _hurst_rows(times, sample.hurst[0])),
    }
    return {
        'kernel': kernel.to_dict(),
        'hurst': hurst_spec.to_dict(),
        'sim': cfg.to_dict(),
        'files': sorted(files)
    }


def _reproduce_fig2(out: str, seed: int, threads: Optional[int]) -> Dict[str, Any]:
    hurst_spec = HurstSpec.tanh_of_fbm(**FIG2_HURST)
    kernel = create_kernel_spec('ito_mbm', 1.0, *hurst_spec.bounds())
    grid = UniformGrid(0.0, FIG2_SETUP['t_max'], FIG2_SETUP['n_cells'])
    cfg = SimConfig(grid=grid, substeps=FIG2_SETUP['substeps'], seed=seed, horizon=FIG2_SETUP['horizon'])
    field = simulate_paths(kernel, hurst_spec, cfg, 1, 'mbm_field', threads)
    moving = simulate_paths(kernel, hurst_spec, cfg, 1, 'moving_average', threads)

    times = moving.times
    files = {
        'mbm_path.csv': write_rows(os.path.join(out, 'mbm_path.csv'), PATH_HEADER,
                                   _path_rows(times, field.values[0], field.hurst[0])),
        'ito_mbm_path.csv': write_rows(os.path.join(out, 'ito_mbm_path.csv'), PATH_HEADER,
                                       _path_rows(times, moving.values[0], moving.hurst[0])),
        'hurst_path.csv': write_rows(os.path.join(out, 'hurst_path.csv'), HURST_HEADER,
                                     _hurst_rows(times, moving.hurst[0])),
    }
    return {
        'kernel': kernel.to_dict(),
        'hurst': hurst_spec.to_dict(),
        'sim': cfg.to_dict(),
        'files': sorted(files)
    }


REPRODUCERS = {'fig1': _reproduce_fig1, 'fig2': _reproduce_fig2}


@exit_codes
def cmd_reproduce(
    figure: str,
    out: str = 'figures',
    seed: Optional[int] = None,
    threads: Optional[int] = None
) -> int:
    """
    Write plot-ready CSVs for a figure plus manifest.json.

    fig1: matern_path.csv (t, value, H) and hurst_path.csv (t, H).
    fig2: mbm_path.csv and ito_mbm_path.csv from one driver, and hurst_path.csv.
    """
    if figure not in REPRODUCERS:
        raise ValueError(f"figure must be one of {FIGURES}, got {figure!r}")
    seed = DEFAULTS['seed'] if seed is None else seed

    _banner(f"Reproducing {figure}")
    details = REPRODUCERS[figure](out, seed, threads)
    manifest = dict({'figure': figure, 'seed': seed, 'stream_id': 0, 'note': REPRODUCTION_NOTE}, **details)
    write_json(os.path.join(out, 'manifest.json'), manifest)
    for name in details['files']:
        print(f"  {os.path.join(out, name)}")
    print(f"  {os.path.join(out, 'manifest.json')}")
    return EXIT_PASS
