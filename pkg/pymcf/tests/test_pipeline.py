'''
A high level test for the basic processing pipeline.

'''

from glob import glob
import json
import tempfile
import os

import numpy as np
import pandas as pd
import pytest
import toml

import pymcf.tests.testdata as testdata
from pymcf.io import ConfigError, load_config
from pymcf.pipeline import Pipeline, generate_config, series_summary, steps_to_string


def test_huisken_pipeline():
    '''
    Runs Huisken's integral of the shrinking circle at two times and writes the results.

    Asserts that the values in the output file are the entropy of the circle and that the
    manifest lists the CSV file with its hash.
    '''
    with tempfile.TemporaryDirectory() as tempdir:
        print('tmpdir created:', tempdir)
        pipeline_config = testdata.example_pipeline_config(tempdir)

        processing_pipeline = Pipeline(pipeline_config)
        processing_pipeline.print_steps()
        description = steps_to_string(processing_pipeline.steps)
        assert 'HuiskenSeries' in description and "'times': [-0.5, -2.0]" in description
        data = processing_pipeline.run()

        files = sorted(os.path.basename(f) for f in glob(os.path.join(tempdir, '*')))
        assert files == ['circle-huisken.csv', 'circle-manifest.json'], f'unexpected files {files}'
        assert set(data['timings']) == {'compute', 'output'}

        frame = pd.read_csv(os.path.join(tempdir, 'circle-huisken.csv'))
        assert list(frame['parameter']) == [-0.5, -2.0]
        np.testing.assert_allclose(frame['value'], testdata.CIRCLE_ENTROPY, atol=1e-6)

        with open(os.path.join(tempdir, 'circle-manifest.json')) as f:
            manifest = json.load(f)
        assert [entry['file'] for entry in manifest['files']] == ['circle-huisken.csv']
        assert len(manifest['files'][0]['sha256']) == 64
        assert manifest['settings']['general']['flow'] == 'circle'
        assert 'numpy' in manifest['versions']

        summary = series_summary(data)
        assert list(summary['series']) == ['huisken']
        assert summary['rows'][0] == 2


def test_pipeline_with_flow_parameters():
    with tempfile.TemporaryDirectory() as tempdir:
        pipeline_config = testdata.example_pipeline_config(tempdir, flow='plane')
        pipeline_config['general']['flow_parameters'] = {'recenter': [[0.0, 0.0, 1.0], 0.0]}
        data = Pipeline(pipeline_config).run()
        values = data['series']['huisken']['value']
        np.testing.assert_allclose(values, np.exp(1 / (4 * np.array([-0.5, -2.0]))), atol=1e-6)


def test_pipeline_from_toml_file():
    with tempfile.TemporaryDirectory() as tempdir:
        config_file = os.path.join(tempdir, 'config.toml')
        with open(config_file, 'w') as f:
            toml.dump(testdata.example_pipeline_config(tempdir, flow='line'), f)
        data = Pipeline(config_file).run()
        assert os.path.isfile(os.path.join(tempdir, 'line-huisken.csv'))
        np.testing.assert_allclose(data['series']['huisken']['value'], 1.0, atol=1e-6)


def test_config_errors():
    with tempfile.TemporaryDirectory() as tempdir:
        good = testdata.example_pipeline_config(tempdir)

        bad = dict(good, output={})
        with pytest.raises(ConfigError):
            load_config(bad)

        bad = dict(good, general=dict(good['general'], colour='red'))
        with pytest.raises(ConfigError):
            load_config(bad)

        bad = dict(good, steps={'compute': {'times': [-1.0]}})
        with pytest.raises(ConfigError):
            load_config(bad)

        bad = dict(good, general={'output_dir': tempdir})
        with pytest.raises(ConfigError):
            load_config(bad)
        assert load_config(bad, require_flow=False)['quad'] == good['quad']

        with pytest.raises(ConfigError):
            load_config(os.path.join(tempdir, 'missing.toml'))


def test_pipeline_build_errors():
    with tempfile.TemporaryDirectory() as tempdir:
        unknown_class = {'pipeline_class': 'pymcf.quantities.VolumeSeries'}
        with pytest.raises(ConfigError):
            Pipeline(testdata.example_pipeline_config(tempdir, command_step=unknown_class))

        bad_argument = {'pipeline_class': 'pymcf.quantities.HuiskenSeries', 'radii': [1.0]}
        with pytest.raises(ConfigError):
            Pipeline(testdata.example_pipeline_config(tempdir, command_step=bad_argument))

        late_times = {'pipeline_class': 'pymcf.quantities.HuiskenSeries', 'times': [-1.0, 1.0]}
        with pytest.raises(ConfigError):
            Pipeline(testdata.example_pipeline_config(tempdir, command_step=late_times))

        short_schedule = {'pipeline_class': 'pymcf.limits.VerifyTheorem1', 'radii': [1, 2, 4, 8]}
        with pytest.raises(ConfigError):
            Pipeline(testdata.example_pipeline_config(tempdir, command_step=short_schedule))

        with pytest.raises(ConfigError):
            Pipeline(testdata.example_pipeline_config(tempdir, flow='catenoid'))

        pipeline_config = testdata.example_pipeline_config(tempdir)
        pipeline_config['quad'] = {'rel_tol': -1.0}
        with pytest.raises(ConfigError):
            Pipeline(pipeline_config)


def test_generate_config():
    pipeline_config = generate_config('ecker', 'grim_reaper', radii=[1, 2, 4, 8, 16], threads=2)
    assert pipeline_config['steps']['ecker']['pipeline_class'] == 'pymcf.quantities.EckerSeries'
    assert pipeline_config['steps']['ecker']['radii'] == [1, 2, 4, 8, 16]
    assert pipeline_config['steps']['output']['prefix'] == 'grim_reaper'
    assert pipeline_config['general']['threads'] == 2
    assert load_config(pipeline_config) is not None

    unset = generate_config('verify', 'bowl', radii=None, times=None)
    assert set(unset['steps']['verify']) == {'pipeline_class'}

    with pytest.raises(ConfigError):
        generate_config('volume', 'circle')
    with pytest.raises(ConfigError):
        generate_config('huisken', 'circle', radii=[1.0])
