'''
Module for managing the PyMCF processing pipeline

Refer to :class:`Pipeline` for examples of how to run a set of computations on one flow
'''
from typing import TypedDict
from operator import methodcaller
import importlib
import time

import pandas as pd

from pymcf.flows import get_flow
from pymcf.io import ConfigError, load_config
from pymcf.quad import QuadConfig


class Pipeline():
    '''The processing pipeline class
    ================================

    The steps of a pipeline are classes named by their dotted path in the ``[steps]`` section of
    the configuration. Each step is constructed with the remaining keys of its section as
    keyword arguments and is then called with the common data dictionary
    :class:`pymcf.pipeline.Data`, which it returns (usually with new series or results added).

    The ``[general]`` section selects the flow (catalog name and parameters), the output directory,
    the random seed and the number of threads; ``[quad]`` overrides the numerical settings of
    :class:`pymcf.quad.QuadConfig`.

    Running a pipeline:
    """""""""""""""""""

    .. code-block:: python

        settings = pymcf.io.load_config('config.toml')
        processing_pipeline = pymcf.pipeline.Pipeline(settings)
        data = processing_pipeline.run()

    An example config file can be found in ``notebooks/config.toml``.
    '''

    def __init__(self, settings):
        self.settings = load_config(settings)
        self.stepnames = list(self.settings['steps'].keys())

        print('Initialising pipeline')
        self.data = Data()
        self.data['settings'] = self.settings
        self.data['series'] = dict()
        self.data['results'] = dict()
        self.data['timings'] = dict()

        self.pass_general_settings()
        print('flow:', self.data['flow'].describe())

        # build every step up front so that bad step arguments fail before any computation
        self.steps = build_steps(self.settings['steps'])
        print('Pipeline ready with these data: ', list(self.data.keys()))

    def run(self):
        '''Method for executing the processing pipeline.

        Returns:
            data (Data): the data dictionary after the last step
        '''
        for stepname in self.stepnames:
            callobj = self.steps[stepname]
            start = time.perf_counter()
            self.data = callobj(self.data)
            self.data['timings'][stepname] = time.perf_counter() - start
        return self.data

    def pass_general_settings(self):
        general = self.settings['general']
        try:
            self.data['flow'] = get_flow(general['flow'], **(general.get('flow_parameters') or {}))
        except ValueError as err:
            raise ConfigError(str(err)) from err
        quad = dict(self.settings['quad'])
        if 'threads' in general:
            quad['threads'] = general['threads']
        try:
            self.data['cfg'] = QuadConfig.from_dict(quad)
        except (TypeError, ValueError) as err:
            raise ConfigError(f'bad [quad] settings: {err}') from err
        self.data['seed'] = int(general.get('seed', 0))
        self.data['output_dir'] = general.get('output_dir', '.')

    def print_steps(self):
        '''Print the steps dictionary
        '''
        print('\n-- Pipeline configuration --\n')
        from pymcf import __version__ as pymcf_version
        print('PyMCF version: ' + pymcf_version + '\n')
        print(steps_to_string(self.steps))
        print('\n---------------------------------\n')


class Data(TypedDict):
    '''Data dictionary which is passed between :class:`pymcf.pipeline` steps.
    '''

    settings: dict
    '''The validated configuration, see :func:`pymcf.io.load_config`'''
    flow: object
    '''The flow under study, built from 'general.flow' and 'general.flow_parameters'
    by :func:`pymcf.flows.get_flow`
    '''
    cfg: QuadConfig
    '''Numerical settings from the [quad] section'''
    seed: int
    '''Seed of every random choice (entropy start perturbations, mollifier samples)'''
    output_dir: str
    '''Directory for :class:`pymcf.io.SeriesToDisc`'''
    series: dict
    '''Tables (pd.DataFrame) by name, each written to one CSV file'''
    results: dict
    '''Reports by name, e.g. the :class:`pymcf.limits.Theorem1Report` of
    :class:`pymcf.limits.VerifyTheorem1`, written as JSON'''
    timings: dict
    '''Wall-clock seconds per step'''
    files: list
    '''Files written by :class:`pymcf.io.SeriesToDisc`'''


def steps_to_string(steps):
    '''Convert pipeline steps dictionary to a human-readable string

    Args:
        steps (dict): pipeline steps dictionary

    Returns:
        str: human-readable string of the types and variables
    '''

    steps_str = '\n'
    for i, key in enumerate(steps.keys()):
        steps_str += (str(i + 1) + ') Step: ' + key
                      + '\n   Type: ' + str(type(steps[key]))
                      + '\n   Vars: ' + str(vars(steps[key]))
                      + '\n')
    return steps_str


def build_repr(toml_steps, step_name):
    '''Build a callable object from settings, which can be used to construct the pipeline steps dict

    Parameters
    ----------
    toml_steps : dict
        TOML-formatted steps
    step_name : str
        the key of the TOML-formatted steps which should be use to create a callable object

    Returns
    -------
    obj
        callable object, useable in a pipeline steps dict

    Raises
    ------
    pymcf.io.ConfigError
        unknown class or arguments
    '''
    pipeline_class = toml_steps[step_name]['pipeline_class']
    classname = pipeline_class.split('.')[-1]
    modulename = pipeline_class.replace(classname, '')[:-1]

    keys = [k for k in toml_steps[step_name] if k != 'pipeline_class']

    arguments = dict()
    for k in keys:
        arguments[k] = toml_steps[step_name][k]

    try:
        module = importlib.import_module(modulename)
        m = methodcaller(classname, **arguments)
        callobj = m(module)
    except (ImportError, AttributeError, TypeError, ValueError) as err:
        raise ConfigError(f'[steps.{step_name}] could not build {pipeline_class}: {err}') from err
    print(classname, ' ready with:', arguments)
    return callobj


def build_steps(toml_steps):
    '''Build a steps dictionary, ready for pipeline use, from a TOML-formatted steps dict

    Parameters
    ----------
    toml_steps : dict
        TOML-formatted steps (usually loaded from a config.toml file)

    Returns
    -------
    dict
        steps dict that is useable by `pymcf.pipeline.Pipeline`
    '''
    step_names = list(toml_steps.keys())
    steps = dict()
    for step_name in step_names:
        steps[step_name] = build_repr(toml_steps, step_name)

    return steps


def series_summary(data):
    '''One row per series: name, number of rows, columns'''
    return pd.DataFrame([dict(series=name, rows=len(frame), columns=' '.join(map(str, frame.columns)))
                         for name, frame in data['series'].items()],
                        columns=['series', 'rows', 'columns'])


COMMAND_STEPS = {
    'huisken': ('pymcf.quantities.HuiskenSeries', dict(times='times')),
    'ecker': ('pymcf.quantities.EckerSeries', dict(radii='radii')),
    'entropy': ('pymcf.entropy.EntropySeries', dict(times='times')),
    'density': ('pymcf.quantities.DensityStep', dict()),
    'verify': ('pymcf.limits.VerifyTheorem1', dict(radii='radii', times='times')),
    'corollary': ('pymcf.limits.VerifyCorollary32', dict(radii='radii', times='times')),
    'mollifier': ('pymcf.mollifier.MollifierSuite', dict(eps='eps', radii='radii')),
}
'''Step class run by each command, and which schedules it takes'''


def generate_config(command, flow, flow_parameters=None, output_dir='.', seed=0, threads=1,
                    quad=None, **schedules):
    '''Generate the pipeline config of one command as a dict

    Parameters
    ----------
    command : str
        one of :data:`COMMAND_STEPS`
    flow : str
        catalog flow name
    flow_parameters : dict, optional
        parameters and transforms of the flow
    output_dir : str
        directory of the output files
    seed : int
        random seed
    threads : int
        worker threads
    quad : dict, optional
        :class:`pymcf.quad.QuadConfig` overrides
    **schedules
        ``radii``, ``times`` or ``eps`` lists; unset (None) schedules keep the step defaults

    Returns:
    --------
    dict
        pipeline_config toml dict
    '''
    if command not in COMMAND_STEPS:
        raise ConfigError(f'unknown command {command!r}; available: {sorted(COMMAND_STEPS)}')
    pipeline_class, accepted = COMMAND_STEPS[command]
    step = {'pipeline_class': pipeline_class}
    for key, value in schedules.items():
        if value is None:
            continue
        if key not in accepted:
            raise ConfigError(f'{command} does not take a {key} schedule')
        step[accepted[key]] = list(value)

    pipeline_config = {
        'general': {
            'flow': flow,
            'flow_parameters': dict(flow_parameters or {}),
            'output_dir': output_dir,
            'seed': seed,
            'threads': threads,
        },
        'quad': dict(quad or {}),
        'steps': {
            command: step,
            'output': {
                'pipeline_class': 'pymcf.io.SeriesToDisc',
                'prefix': flow,
            }
        }
    }
    return pipeline_config
