#!/usr/bin/env python3
"""
Multifractional Process Runner

Command-line entry point:
1. simulate    - sample Itô-mBm, multifractional Matérn or field mBm paths to CSV
2. covariance  - evaluate the exact covariance oracles
3. verify      - run a statistical verification suite and write its report
4. reproduce   - write plot-ready CSVs for the two sample-path figures
"""

import argparse
import logging
import os
import sys

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from runner.commands import (  # noqa: E402
    COVARIANCE_MODELS, EXIT_CONFIG, FIGURES, SUITES,
    cmd_covariance, cmd_reproduce, cmd_simulate, cmd_verify
)
from simulation.moving_average import PROCESSES  # noqa: E402


def simulate(args) -> int:
    return cmd_simulate(args.config, args.out, seed=args.seed, process=args.process,
                        n_paths=args.paths, threads=args.threads)


def covariance(args) -> int:
    return cmd_covariance(
        args.model,
        out=args.out,
        check=args.check,
        t_values=args.t,
        s_values=args.s,
        hurst=args.H,
        weights=args.weights,
        h_t=args.Ht,
        h_s=args.Hs,
        sigma=args.sigma,
        deltas=args.delta,
        allow_limit=args.allow_limit,
        normalization=args.normalization
    )


def verify(args) -> int:
    return cmd_verify(args.suite, args.config, out=args.out, seed=args.seed, threads=args.threads)


def reproduce(args) -> int:
    return cmd_reproduce(args.figure, out=args.out, seed=args.seed, threads=args.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Multifractional Gaussian Process Simulation',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Simulate one path with the default config (Itô-mBm, H = 0.5, seed 42)
  python run_multifrac.py simulate --out path.csv

  # Simulate 100 field mBm paths from a config file
  python run_multifrac.py simulate --config run.json --process mbm_field --paths 100 --out paths.csv

  # Covariance of fBm and of the field mBm
  python run_multifrac.py covariance fbm --H 0.5 --t 1 --s 2
  python run_multifrac.py covariance mbm --Ht 0.3 --Hs 0.7 --t 1 --s 2 --check

  # Stationary covariance table for H ~ 1/2 delta_0.4 + 1/2 delta_0.6
  python run_multifrac.py covariance stationary --H 0.4 0.6 --t 1 2 --s 1 2 --out table.csv

  # Verification suites (exit 0 on pass, 1 on failure)
  python run_multifrac.py verify rescale --config run.json --out results
  python run_multifrac.py verify fig2 --threads 4

  # Plot-ready CSVs for the sample-path figures
  python run_multifrac.py reproduce fig1 --out figures/fig1
        """
    )
    parser.add_argument('--verbose', '-v', action='store_true',
                        help='Log debug output (default: warnings only)')
    subparsers = parser.add_subparsers(dest='command')

    def add_run_options(sub, out_default):
        sub.add_argument('--config', '-c', default=None,
                         help='JSON run config (default: built-in defaults)')
        sub.add_argument('--out', '-o', default=out_default,
                         help=f'Output path (default: {out_default})')
        sub.add_argument('--seed', type=int, default=None,
                         help='Override the config seed')
        sub.add_argument('--threads', type=int, default=None,
                         help='Worker threads (default: MULTIFRAC_THREADS or CPU count)')

    sub = subparsers.add_parser('simulate', help='Simulate paths to CSV')
    add_run_options(sub, 'path.csv')
    sub.add_argument('--process', choices=PROCESSES, default=None,
                     help='Process to simulate (default: from config)')
    sub.add_argument('--paths', type=int, default=None,
                     help='Number of paths (default: from config)')
    sub.set_defaults(handler=simulate)

    sub = subparsers.add_parser('covariance', help='Evaluate a covariance oracle')
    sub.add_argument('model', choices=COVARIANCE_MODELS)
    sub.add_argument('--t', type=float, nargs='+', default=[],
                     help='First times (r for local-limit)')
    sub.add_argument('--s', type=float, nargs='+', default=[],
                     help='Second times (v for local-limit)')
    sub.add_argument('--H', type=float, nargs='+', default=[],
                     help='Hurst value, or atoms of a finite Hurst distribution')
    sub.add_argument('--weights', type=float, nargs='+', default=None,
                     help='Weights of the Hurst atoms (default: uniform)')
    sub.add_argument('--Ht', type=float, default=None, help='Hurst value at t (mbm)')
    sub.add_argument('--Hs', type=float, default=None, help='Hurst value at s (mbm)')
    sub.add_argument('--sigma', type=float, default=1.0, help='Volatility (default: 1.0)')
    sub.add_argument('--delta', type=int, nargs='+', default=[], help='Lags (increment)')
    sub.add_argument('--normalization', choices=['kernel', 'standard'], default='kernel',
                     help='fBm scale: A(H) (kernel) or 1 (standard)')
    sub.add_argument('--allow-limit', action='store_true',
                     help='Evaluate mbm at the removable singularity H_t + H_s = 1')
    sub.add_argument('--check', action='store_true',
                     help='Compare mbm values with numerical quadrature')
    sub.add_argument('--out', '-o', default=None, help='Write a CovarianceTable CSV')
    sub.set_defaults(handler=covariance)

    sub = subparsers.add_parser('verify', help='Run a verification suite')
    sub.add_argument('suite', choices=SUITES)
    add_run_options(sub, 'results')
    sub.set_defaults(handler=verify)

    sub = subparsers.add_parser('reproduce', help='Write figure CSVs and a manifest')
    sub.add_argument('figure', choices=FIGURES)
    sub.add_argument('--out', '-o', default='figures', help='Output directory (default: figures)')
    sub.add_argument('--seed', type=int, default=None, help='Seed (default: 42)')
    sub.add_argument('--threads', type=int, default=None, help='Worker threads')
    sub.set_defaults(handler=reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
