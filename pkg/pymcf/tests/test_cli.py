'''
Tests of the command line entry points.

'''

from dataclasses import replace
import hashlib
import json
import os
import tempfile

import numpy as np
import pandas as pd
import toml
from typer.testing import CliRunner

from pymcf.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NUMERIC, app
import pymcf.limits
import pymcf.mollifier
import pymcf.quantities
import pymcf.tests.testdata as testdata


runner = CliRunner()


def test_huisken_command():
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['huisken', '--flow', 'circle', '--t=-0.5,-2', '--out', tempdir])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(os.path.join(tempdir, 'circle-huisken.csv'))
        assert list(frame.columns) == ['kind', 'parameter', 'center_x', 'center_t', 'value', 'error']
        np.testing.assert_allclose(frame['value'], testdata.CIRCLE_ENTROPY, atol=1e-6)
        assert os.path.isfile(os.path.join(tempdir, 'circle-manifest.json'))


def test_ecker_command():
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['ecker', '--flow', 'line', '--r', '1,2', '--out', tempdir,
                                     '--threads', '2'])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(os.path.join(tempdir, 'line-ecker.csv'))
        assert list(frame['parameter']) == [1.0, 2.0]
        np.testing.assert_allclose(frame['value'], 1.0, atol=1e-6)


def test_configuration_errors_exit_with_code_2():
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['huisken', '--flow', 'catenoid', '--t=-1', '--out', tempdir])
        assert result.exit_code == EXIT_CONFIG, result.output

        result = runner.invoke(app, ['huisken', '--t=-1', '--out', tempdir])
        assert result.exit_code == EXIT_CONFIG, 'a flow is required'

        result = runner.invoke(app, ['ecker', '--flow', 'line', '--r', 'one,two', '--out', tempdir])
        assert result.exit_code == EXIT_CONFIG, result.output

        result = runner.invoke(app, ['process', os.path.join(tempdir, 'missing.toml')])
        assert result.exit_code == EXIT_CONFIG, result.output


def test_config_file_with_flag_overrides():
    with tempfile.TemporaryDirectory() as tempdir:
        config_file = os.path.join(tempdir, 'config.toml')
        with open(config_file, 'w') as f:
            toml.dump({'general': {'flow': 'circle', 'seed': 1}, 'quad': {'rel_tol': 1e-7}}, f)
        out = os.path.join(tempdir, 'out')
        result = runner.invoke(app, ['huisken', '--config', config_file, '--flow', 'sphere2',
                                     '--t=-1', '--out', out])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(os.path.join(out, 'sphere2-huisken.csv'))
        assert abs(frame['value'][0] - testdata.SPHERE2_ENTROPY) < 1e-6


def test_generate_config_and_process():
    with tempfile.TemporaryDirectory() as tempdir:
        config_file = os.path.join(tempdir, 'density-config.toml')
        result = runner.invoke(app, ['generate-config', 'density', 'circle', '--out', tempdir,
                                     '--config-filename', config_file])
        assert result.exit_code == 0, result.output
        settings = toml.load(config_file)
        assert settings['steps']['density']['pipeline_class'] == 'pymcf.quantities.DensityStep'

        result = runner.invoke(app, ['process', config_file])
        assert result.exit_code == 0, result.output
        assert os.path.isfile(os.path.join(tempdir, 'circle-manifest.json'))

        result = runner.invoke(app, ['generate-config', 'volume', 'circle'])
        assert result.exit_code == EXIT_CONFIG


def test_mollifier_command():
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['mollifier', '--eps', '0.5,0.1', '--r', '1,2',
                                     '--out', tempdir])
        assert result.exit_code == 0, result.output
        suite = pd.read_csv(os.path.join(tempdir, 'circle-mollifier.csv'))
        assert list(suite['eps']) == [0.5, 0.1]
        assert suite['sandwich_violations'].sum() == 0
        table = pd.read_csv(os.path.join(tempdir, 'circle-monotonicity.csv'))
        assert list(table['sigma']) == [1.0, 1.0] and list(table['rho']) == [2.0, 2.0]
        assert table['holds'].all()

        result = runner.invoke(app, ['mollifier', '--r', '2,1', '--out', tempdir])
        assert result.exit_code == EXIT_CONFIG, 'sigma must be below rho'


def test_mollifier_command_fails_on_monotonicity_residual(monkeypatch):
    def off_by_half(flow, sigma, rho, fam, cfg=None):
        return dict(lhs=1.0, rhs=0.5, residual=0.5, relative=0.5, error=1e-8)

    monkeypatch.setattr(pymcf.mollifier, 'smoothed_monotonicity_check', off_by_half)
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['mollifier', '--eps', '0.5', '--out', tempdir])
        assert result.exit_code == EXIT_FAIL, result.output


VERIFY_PLANE = ['verify', '--flow', 'plane', '--no-corollary', '--r', '1,2,4,8,16',
                '--t=-1,-4,-16,-64,-256']


def test_verify_command_exit_codes(monkeypatch):
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, VERIFY_PLANE + ['--out', tempdir])
        assert result.exit_code == 0, result.output
        assert 'PASS' in result.output
        assert os.path.isfile(os.path.join(tempdir, 'plane-theorem1_ecker.csv'))

        result = runner.invoke(app, ['verify', '--flow', 'plane', '--no-corollary',
                                     '--r', '1,2,4,8', '--out', tempdir])
        assert result.exit_code == EXIT_CONFIG, 'a schedule of 4 radii is a configuration error'

        real = pymcf.limits.verify_theorem1

        def failing(*args, **kwargs):
            return replace(real(*args, **kwargs), verdict='FAIL')

        monkeypatch.setattr(pymcf.limits, 'verify_theorem1', failing)
        result = runner.invoke(app, VERIFY_PLANE + ['--out', tempdir])
        assert result.exit_code == EXIT_FAIL, result.output
        assert 'FAIL' in result.output


def test_numerical_errors_exit_with_code_3(monkeypatch):
    def domain_error(*args, **kwargs):
        raise ValueError('math domain error')

    monkeypatch.setattr(pymcf.quantities, 'huisken_integral', domain_error)
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['huisken', '--flow', 'circle', '--t=-1', '--out', tempdir])
        assert result.exit_code == EXIT_NUMERIC, result.output

        result = runner.invoke(app, ['huisken', '--flow', 'circle', '--t=1', '--out', tempdir])
        assert result.exit_code == EXIT_CONFIG, 'times after the centre are a configuration error'


def test_runs_with_the_same_seed_are_byte_identical():
    with tempfile.TemporaryDirectory() as tempdir:
        outputs = []
        for run in ('first', 'second'):
            out = os.path.join(tempdir, run)
            result = runner.invoke(app, ['entropy', '--flow', 'circle', '--t=-0.5', '--seed', '3',
                                         '--out', out])
            assert result.exit_code == 0, result.output
            with open(os.path.join(out, 'circle-entropy.csv'), 'rb') as f:
                outputs.append(f.read())
        assert outputs[0] == outputs[1]


def test_manifest_hashes_match_the_written_files():
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(app, ['huisken', '--flow', 'line', '--t=-1,-4', '--out', tempdir])
        assert result.exit_code == 0, result.output
        with open(os.path.join(tempdir, 'line-manifest.json')) as f:
            manifest = json.load(f)
        assert manifest['files'], 'the manifest lists the written files'
        for entry in manifest['files']:
            with open(os.path.join(tempdir, entry['file']), 'rb') as f:
                digest = hashlib.sha256(f.read()).hexdigest()
            assert digest == entry['sha256'], f'hash mismatch for {entry["file"]}'
