'''
Module containing tools for configuration files, result files and run manifests
'''

from datetime import datetime
import hashlib
import json
import os

import numpy as np
import pandas as pd
import scipy
import toml

from pymcf import __version__ as pymcf_version


CONFIG_SECTIONS = ('general', 'quad', 'steps')
GENERAL_KEYS = ('flow', 'flow_parameters', 'output_dir', 'seed', 'threads')
CSV_FLOAT_FORMAT = '%.17g'


class ConfigError(ValueError):
    '''Invalid configuration file or flags'''


def load_toml(toml_file):
    with open(toml_file, 'r') as f:
        settings = toml.load(f)
    return settings


def load_config(config, require_flow=True):
    '''Load and validate a run configuration

    Parameters
    ----------
    config : str or dict
        path to a TOML or JSON file, or an already parsed dictionary
    require_flow : bool
        fail when [general] names no flow

    Returns
    -------
    dict
        configuration with sections ``general``, ``quad`` and ``steps``

    Raises
    ------
    ConfigError
        unreadable file, unknown sections or keys, or steps without ``pipeline_class``
    '''
    if isinstance(config, (str, os.PathLike)):
        path = str(config)
        try:
            if path.endswith('.json'):
                with open(path, 'r', encoding='utf-8') as f:
                    config = json.load(f)
            else:
                config = load_toml(path)
        except (OSError, ValueError, toml.TomlDecodeError) as err:
            raise ConfigError(f'could not read config {path}: {err}') from err
    config = dict(config)

    unknown = sorted(set(config) - set(CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f'unknown config sections: {unknown}')
    config.setdefault('general', {})
    config.setdefault('quad', {})
    config.setdefault('steps', {})

    unknown = sorted(set(config['general']) - set(GENERAL_KEYS))
    if unknown:
        raise ConfigError(f'unknown [general] keys: {unknown}')
    if require_flow and 'flow' not in config['general']:
        raise ConfigError('[general] needs a flow name')
    for name, step in config['steps'].items():
        if 'pipeline_class' not in step:
            raise ConfigError(f'[steps.{name}] needs a pipeline_class')
    return config


def json_default(obj):
    '''JSON encoding of numpy values and pandas tables'''
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, pd.DataFrame):
        return obj.to_dict(orient='list')
    if hasattr(obj, 'to_dict'):
        return obj.to_dict()
    raise TypeError(f'{type(obj).__name__} is not JSON serialisable')


def write_csv(frame, filename):
    '''Write a table with a header row, '.' decimals and 17 significant digits'''
    frame.to_csv(filename, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    return filename


def write_json(obj, filename):
    with open(filename, 'w', encoding='utf-8') as f:
        json.dump(obj, f, indent=2, ensure_ascii=False, default=json_default)
        f.write('\n')
    return filename


def file_hash(filename):
    '''sha256 of a file's content'''
    sha = hashlib.sha256()
    with open(filename, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            sha.update(block)
    return sha.hexdigest()


def versions():
    return {'pymcf': pymcf_version, 'numpy': np.__version__, 'scipy': scipy.__version__,
            'pandas': pd.__version__}


def write_manifest(output_dir, settings, files, timings=None, prefix='pymcf'):
    '''Write ``<prefix>-manifest.json`` listing inputs, versions, timings and output files

    Every file is listed with its sha256.
    '''
    manifest = dict(created=str(datetime.now()), versions=versions(), settings=settings,
                    timings=timings or {},
                    files=[dict(file=os.path.basename(f), sha256=file_hash(f)) for f in files])
    return write_json(manifest, os.path.join(output_dir, f'{prefix}-manifest.json'))


class SeriesToDisc():
    '''PyMCF pipeline-compatible class writing every series as CSV, reports as JSON, plus a manifest

    Args:
        output_dir (str): directory of the output files (default: ``general.output_dir``)
        prefix (str): file name prefix

    Returns:
        data (dict): data from pipeline, with the written paths in ``data['files']``

    Example config for pipeline useage:

    .. code-block:: toml

        [steps.output]
        pipeline_class = 'pymcf.io.SeriesToDisc'
        prefix = 'grim_reaper'
    '''
    def __init__(self, output_dir=None, prefix='pymcf'):
        self.output_dir = output_dir
        self.prefix = prefix

    def __call__(self, data):
        output_dir = self.output_dir or data.get('output_dir') or '.'
        os.makedirs(output_dir, exist_ok=True)
        files = []
        for name, frame in data['series'].items():
            files.append(write_csv(frame, os.path.join(output_dir, f'{self.prefix}-{name}.csv')))
        for name, result in data['results'].items():
            payload = result.to_dict() if hasattr(result, 'to_dict') else result
            if isinstance(payload, dict):
                files.append(write_json(payload,
                                        os.path.join(output_dir, f'{self.prefix}-{name}.json')))
        files.append(write_manifest(output_dir, data['settings'], files, data.get('timings'),
                                    prefix=self.prefix))
        data['files'] = files
        return data
