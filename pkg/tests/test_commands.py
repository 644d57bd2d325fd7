import json
import os
import sys

import pytest

from runner.commands import (
    EXIT_CONFIG, EXIT_FAIL, EXIT_IO, EXIT_PASS, cmd_covariance, cmd_reproduce, cmd_simulate,
    cmd_verify, covariance_table
)
from runner.config import parse_config
from runner.csv_io import read_rows
from simulation.gaussian import fbm_cov

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import run_multifrac  # noqa: E402

SMALL_RUN = {'seed': 3, 'grid': {'n_cells': 64}, 'sim': {'substeps': 2, 'horizon': 1.0}}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(SMALL_RUN))
    return str(path)


def printed_value(capsys) -> float:
    return float(capsys.readouterr().out.strip().splitlines()[-1])


def test_covariance_fbm_brownian(capsys):
    assert cmd_covariance('fbm', t_values=[1.0], s_values=[2.0], hurst=[0.5]) == EXIT_PASS
    assert printed_value(capsys) == pytest.approx(1.0, abs=1e-12)


def test_covariance_increment_brownian(capsys):
    assert cmd_covariance('increment', hurst=[0.5], deltas=[1]) == EXIT_PASS
    assert capsys.readouterr().out.strip() == '0.0'


def test_covariance_mbm_reduces_to_fbm(capsys):
    assert cmd_covariance('mbm', t_values=[1.0], s_values=[2.0], h_t=0.3, h_s=0.3) == EXIT_PASS
    assert printed_value(capsys) == pytest.approx(fbm_cov(1.0, 2.0, 0.3), rel=1e-10)


def test_covariance_mbm_quadrature_check(capsys):
    status = cmd_covariance('mbm', check=True, t_values=[1.0], s_values=[2.0], h_t=0.4, h_s=0.7)
    assert status == EXIT_PASS
    assert 'quadrature' in capsys.readouterr().out


def test_covariance_table_csv(tmp_path, capsys):
    out = str(tmp_path / 'table.csv')
    status = cmd_covariance('stationary', out=out, t_values=[1.0, 2.0], s_values=[1.0, 2.0],
                            hurst=[0.4, 0.6])
    assert status == EXIT_PASS
    rows = read_rows(out)
    assert len(rows) == 4
    assert set(rows[0]) == {'t', 's', 'value', 'model'}
    assert rows[0]['model'] == 'stationary'
    assert len(capsys.readouterr().out.strip().splitlines()) == 4


def test_covariance_table_increment_rows():
    table = covariance_table('increment', hurst=[0.5], deltas=[0, 1, 2])
    assert table.queries == [(0, None), (1, None), (2, None)]
    assert table.values[0] == pytest.approx(1.0)
    assert table.values[2] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize('model, params', [
    ('fbm', {'t_values': [1.0], 's_values': [1.0]}),
    ('fbm', {'t_values': [1.0], 's_values': [1.0], 'hurst': [0.3, 0.4]}),
    ('mbm', {'t_values': [1.0], 's_values': [1.0], 'h_t': 0.3}),
    ('increment', {'hurst': [0.5]}),
    ('stationary', {'hurst': [0.5], 't_values': [1.0]}),
    ('fbm', {'t_values': [1.0], 's_values': [1.0], 'hurst': [1.5]}),
])
def test_covariance_bad_parameters_exit_2(model, params, capsys):
    assert cmd_covariance(model, **params) == EXIT_CONFIG
    assert 'Error' in capsys.readouterr().err


def test_covariance_check_only_for_mbm():
    assert cmd_covariance('fbm', check=True, t_values=[1.0], s_values=[1.0], hurst=[0.5]) == EXIT_CONFIG


def test_simulate_writes_one_path(config_path, tmp_path):
    out = str(tmp_path / 'path.csv')
    assert cmd_simulate(config_path, out) == EXIT_PASS
    rows = read_rows(out)
    assert len(rows) == 65
    assert list(rows[0]) == ['t', 'value', 'H']
    assert float(rows[0]['value']) == 0.0
    assert float(rows[-1]['t']) == 1.0
    assert float(rows[10]['H']) == 0.5


def test_simulate_is_reproducible(config_path, tmp_path):
    first, second, other = (str(tmp_path / name) for name in ('a.csv', 'b.csv', 'c.csv'))
    cmd_simulate(config_path, first)
    cmd_simulate(config_path, second, threads=3)
    cmd_simulate(config_path, other, seed=4)
    with open(first, 'rb') as a, open(second, 'rb') as b, open(other, 'rb') as c:
        reference = a.read()
        assert b.read() == reference
        assert c.read() != reference


def test_simulate_many_paths(config_path, tmp_path):
    out = str(tmp_path / 'paths.csv')
    assert cmd_simulate(config_path, out, process='mbm_field', n_paths=3) == EXIT_PASS
    rows = read_rows(out)
    assert len(rows) == 3 * 65
    assert list(rows[0]) == ['t', 'value', 'H', 'path_id']
    assert {row['path_id'] for row in rows} == {'0', '1', '2'}


def test_simulate_accepts_a_run_config(tmp_path):
    out = str(tmp_path / 'path.csv')
    assert cmd_simulate(parse_config(SMALL_RUN), out) == EXIT_PASS
    assert len(read_rows(out)) == 65


def test_simulate_exit_codes(tmp_path, capsys):
    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps({'grid': {'cells': 4}}))
    assert cmd_simulate(str(bad), str(tmp_path / 'x.csv')) == EXIT_CONFIG
    assert cmd_simulate(str(tmp_path / 'absent.json'), str(tmp_path / 'x.csv')) == EXIT_IO

    blocker = tmp_path / 'blocker'
    blocker.write_text('')
    good = tmp_path / 'good.json'
    good.write_text(json.dumps(SMALL_RUN))
    assert cmd_simulate(str(good), str(blocker / 'path.csv')) == EXIT_IO
    assert 'Error' in capsys.readouterr().err


def test_verify_kc_flags_over_claimed_exponent(tmp_path):
    run = dict(SMALL_RUN, grid={'n_cells': 128}, sim={'substeps': 1, 'horizon': 1.0},
               analysis={'kc': {'exponent': 0.8, 'n_paths': 300}})
    path = tmp_path / 'kc.json'
    path.write_text(json.dumps(run))
    out = str(tmp_path / 'results')
    assert cmd_verify('kc', str(path), out=out) == EXIT_FAIL

    with open(os.path.join(out, 'kc_report.json')) as f:
        report = json.load(f)
    assert report['suite'] == 'kc'
    assert report['report']['verdict'] == 'unbounded_trend'
    assert report['config']['analysis']['kc']['exponent'] == 0.8
    assert len(read_rows(os.path.join(out, 'kc_report.csv'))) == 12


def test_verify_kc_passes_with_realized_exponent(tmp_path):
    run = dict(SMALL_RUN, grid={'n_cells': 128}, sim={'substeps': 1, 'horizon': 1.0},
               analysis={'kc': {'p': 2.0, 'n_paths': 2000}})
    config = parse_config(run)
    assert cmd_verify('kc', config, out=str(tmp_path)) == EXIT_PASS


def test_verify_unknown_suite(tmp_path):
    assert cmd_verify('spectral', out=str(tmp_path)) == EXIT_CONFIG


def test_reproduce_fig1(tmp_path):
    out = str(tmp_path / 'fig1')
    assert cmd_reproduce('fig1', out=out, seed=1) == EXIT_PASS
    rows = read_rows(os.path.join(out, 'matern_path.csv'))
    assert len(rows) == 1025
    assert list(rows[0]) == ['t', 'value', 'H']
    hurst = read_rows(os.path.join(out, 'hurst_path.csv'))
    assert [row['H'] for row in hurst] == [row['H'] for row in rows]
    with open(os.path.join(out, 'manifest.json')) as f:
        manifest = json.load(f)
    assert manifest['figure'] == 'fig1'
    assert manifest['seed'] == 1
    assert manifest['kernel']['family'] == 'matern'
    assert manifest['files'] == ['hurst_path.csv', 'matern_path.csv']


@pytest.mark.slow
def test_reproduce_fig2(tmp_path):
    out = str(tmp_path / 'fig2')
    assert cmd_reproduce('fig2', out=out) == EXIT_PASS
    field = read_rows(os.path.join(out, 'mbm_path.csv'))
    moving = read_rows(os.path.join(out, 'ito_mbm_path.csv'))
    assert len(field) == len(moving) == 4097
    assert field[0]['value'] == moving[0]['value']


def test_reproduce_unknown_figure(tmp_path):
    assert cmd_reproduce('fig3', out=str(tmp_path)) == EXIT_CONFIG


def test_cli_covariance(capsys):
    status = run_multifrac.main(['covariance', 'fbm', '--H', '0.5', '--t', '1', '--s', '2'])
    assert status == EXIT_PASS
    assert printed_value(capsys) == pytest.approx(1.0, abs=1e-12)


def test_cli_simulate(config_path, tmp_path):
    out = str(tmp_path / 'cli.csv')
    assert run_multifrac.main(['simulate', '--config', config_path, '--out', out, '--paths', '2']) == EXIT_PASS
    assert len(read_rows(out)) == 130


def test_cli_without_command(capsys):
    assert run_multifrac.main([]) == EXIT_CONFIG
    assert 'usage' in capsys.readouterr().out
