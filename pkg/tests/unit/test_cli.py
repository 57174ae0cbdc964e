# coding: utf-8

import json
import os
import tempfile

import pytest

from click.testing import CliRunner

import memat
import memat.cli

runner = CliRunner()


def invoke(*arguments, **kwargs):
    """ Run the command line with given arguments """
    return runner.invoke(memat.cli.main, list(arguments), **kwargs)


def test_version():
    """ Version option """
    result = invoke('--version')
    assert result.exit_code == 0
    assert memat.__version__ in result.output


def test_rates_table():
    """ Human readable rates """
    result = invoke('rates')
    assert result.exit_code == 0
    assert 'reference' in result.output
    assert 'trap mismatch' in result.output


def test_rates_json():
    """ Machine readable rates """
    result = invoke('rates', '--format', 'json')
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert abs(data['rates']['g'] / 214e3 - 1) < 0.02
    assert data['hierarchy']['ok'] is True
    assert data['units']['rate'] == 's⁻¹'


def test_rates_override():
    """ Parameter override from the command line """
    result = invoke('rates', '-f', 'json', '--set', 'cavity.finesse=300')
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert abs(data['rates']['g'] / (214e3 * 300 / 450) - 1) < 0.02


def test_command_prefix():
    """ Shortened command names """
    assert invoke('rat', '-f', 'json').exit_code == 0
    result = invoke('sweep')
    assert result.exit_code == 1
    assert 'Did you mean' in result.output


def test_missing_config():
    """ Missing configuration file """
    result = invoke('rates', '--config', '/nonexistent/memat/config.json')
    assert result.exit_code == 1
    assert 'not found' in result.output


def test_invalid_override():
    """ Unknown configuration field """
    result = invoke('rates', '--set', 'cavity.colour=red')
    assert result.exit_code == 1
    assert 'colour' in result.output


def test_usage_error():
    """ Unknown option shows the help """
    result = invoke('rates', '--bogus')
    assert result.exit_code == 1
    assert 'Usage' in result.output


def test_unstable_model():
    """ Numerical failures use their own exit code """
    result = invoke(
        'steady-state', '--set', 'membrane.Q_m=inf', '--gamma-cool', '0')
    assert result.exit_code == 2
    assert 'stable' in result.output


def test_steady_state():
    """ Steady state of the reference configuration """
    result = invoke('steady-state')
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert 0.4 <= data['n_m'] <= 1.5
    assert data['gamma_cool'] == 2.2e5
    assert 0.50 <= data['adiabatic']['n_ss'] <= 0.54
    assert len(data['cov']) == 4


def test_output_file():
    """ Output file with its manifest """
    tmp = tempfile.mkdtemp()
    path = os.path.join(tmp, 'rates.json')
    result = invoke('rates', '--out', path)
    assert result.exit_code == 0
    with open(path) as source:
        assert 'rates' in json.load(source)
    with open(f'{path}.manifest.json') as source:
        manifest = json.load(source)
    assert manifest['command'] == 'rates'
    assert manifest['outputs'] == [path]
    assert manifest['version'] == memat.__version__
    assert len(manifest['config_sha256']) == 64


def test_output_directory():
    """ Relative outputs placed into the output directory """
    tmp = tempfile.mkdtemp()
    result = invoke(
        'thermal', '--out', 'thermal.json', env={'MEMAT_OUTPUT_DIR': tmp})
    assert result.exit_code == 0
    with open(os.path.join(tmp, 'thermal.json')) as source:
        data = json.load(source)
    assert data['method'] == 'circular'
    assert abs(data['delta_T'] / 4.0 - 1) < 0.05


def test_thermal_field():
    """ Temperature field dump """
    tmp = tempfile.mkdtemp()
    field = os.path.join(tmp, 'field.csv')
    result = invoke('thermal', '--field', field, '-f', 'yaml')
    assert result.exit_code == 0
    assert 'delta_T' in result.output
    with open(field) as source:
        lines = source.read().splitlines()
    assert lines[0] == 'r,T'
    assert len(lines) == 202


def test_thermal_manifest():
    """ Temperature field listed in the manifest """
    tmp = tempfile.mkdtemp()
    field = os.path.join(tmp, 'field.csv')
    path = os.path.join(tmp, 'thermal.json')
    result = invoke('thermal', '--field', field, '--out', path)
    assert result.exit_code == 0
    with open(f'{path}.manifest.json') as source:
        manifest = json.load(source)
    assert manifest['command'] == 'thermal'
    assert manifest['outputs'] == [field, path]


def test_optics_csv():
    """ Cavity scan as csv """
    result = invoke('optics', '--span', '0.2', '--points', '11')
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == 'omega,re_T,im_T,abs_T2,phase,lorentzian_T2'
    assert len(lines) == 12


def test_evolve_csv():
    """ Occupation dynamics as csv """
    result = invoke('evolve', '--points', '11')
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == 't,n_m,n_at'
    assert len(lines) == 12
    assert lines[1].startswith('0.0,')


def test_evolve_step():
    """ Too long integrator step """
    result = invoke('evolve', '--points', '3', '--step', '1e-3')
    assert result.exit_code == 2


def test_spectrum_csv():
    """ Spectra as csv """
    result = invoke('spectrum', '--points', '101')
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == 'omega,x_m,p_m,x_at,p_at'
    assert len(lines) == 102


def test_sweep_coherent():
    """ Short coherent sweep """
    result = invoke(
        'sweep-coherent', '--points', '5', '--workers', '1', '--json-summary')
    assert result.exit_code == 0
    assert 'ratio_total' in result.output
    assert '"optimum"' in result.output


def test_sweep_cooling():
    """ Short cooling sweep as json """
    result = invoke(
        'sweep-cooling', '--fpoints', '3', '--gpoints', '3', '-w', '1',
        '-f', 'json')
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert data['cells'] == 9
    assert data['failures'] == 0
    assert len(data['records']) == 9


def test_optimize_pinned():
    """ Optimization with a pinned finesse """
    result = invoke('optimize', '-b', 'finesse=450:450', '-w', '1')
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert abs(data['record']['values']['finesse'] - 450) < 1e-6
    result = invoke('optimize', '-b', 'finesse', '-w', '1')
    assert result.exit_code == 1


def test_reproduce_table1():
    """ Reference table reproduced """
    result = invoke('reproduce', 'table1')
    assert result.exit_code == 0
    assert 'All 8 bands passed.' in result.output
    assert 'reference' in result.output


def test_reproduce_aliases():
    """ Recipe aliases are run only once """
    tmp = tempfile.mkdtemp()
    path = os.path.join(tmp, 'reproduce.json')
    result = invoke('reproduce', 'table1', 'reference', '--out', path)
    assert result.exit_code == 0
    with open(path) as source:
        data = json.load(source)
    assert list(data['recipes']) == ['reference']
    assert data['passed'] is True
    assert invoke('reproduce', 'fig5').exit_code == 1


def test_reproduce_fig3():
    """ Coupling ratios over finesse reproduced """
    result = invoke('reproduce', 'fig3', '--workers', '1')
    assert result.exit_code == 0
    assert 'All 5 bands passed.' in result.output


@pytest.mark.slow
def test_reproduce_fig4():
    """ Cooling map reproduced """
    result = invoke('reproduce', 'fig4')
    assert result.exit_code == 0
    assert 'All 4 bands passed.' in result.output


def test_reproduce_failure():
    """ Failing band gives a non-zero exit code """
    result = invoke('reproduce', 'table1', '--set', 'cavity.finesse=300')
    assert result.exit_code == 1
    assert 'fail' in result.output
