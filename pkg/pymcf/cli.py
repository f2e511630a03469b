'''
PyMCF top-level code primarily for managing cmd line entry points

Exit codes: 0 success (verification PASS), 1 verification FAIL, 2 configuration error,
3 numerical failure.
'''

import typer
import toml
from rich.progress import Progress

import pymcf.io
import pymcf.pipeline
from pymcf.quad import QuadratureError

app = typer.Typer()

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def parse_list(text, name):
    '''Comma-separated numbers, e.g. "1,2,4" or "-0.5"'''
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise pymcf.io.ConfigError(f'--{name} expects comma-separated numbers, got {text!r}')


def build_settings(command, config_filename=None, flow=None, out=None, threads=None, seed=None,
                   **schedules):
    '''Pipeline config of a command from an optional config file and the command line flags

    Flags override the ``[general]`` entries of the file; the file's own ``[steps]`` replace the
    command's default step when present.
    '''
    settings = dict(general={}, quad={}, steps={})
    if config_filename is not None:
        settings = pymcf.io.load_config(config_filename, require_flow=False)
    general = settings['general']
    flow = flow or general.get('flow')
    if flow is None:
        raise pymcf.io.ConfigError('no flow given: use --flow or [general] flow')

    defaults = pymcf.pipeline.generate_config(
        command, flow,
        flow_parameters=general.get('flow_parameters'),
        output_dir=out or general.get('output_dir', '.'),
        seed=general.get('seed', 0) if seed is None else seed,
        threads=general.get('threads', 1) if threads is None else threads,
        quad=settings.get('quad'),
        **schedules)
    if settings.get('steps'):
        defaults['steps'] = settings['steps']
    return pymcf.io.load_config(defaults)


def execute(settings):
    '''Build and run a pipeline, mapping failures onto exit codes

    Configuration errors (:class:`pymcf.io.ConfigError`) exit with 2; quadrature failures and
    any other value or arithmetic error raised while computing exit with 3.

    Returns:
        data (pymcf.pipeline.Data): the pipeline data after the last step
    '''
    try:
        with Progress(transient=True) as progress:
            progress.console.print("[blue]INITIALISE PIPELINE")
            processing_pipeline = pymcf.pipeline.Pipeline(settings)

            progress.console.print("[blue]RUN PIPELINE")
            data = processing_pipeline.run()

            progress.console.print("[blue]WRITTEN FILES")
            for filename in data.get('files', []):
                progress.console.print(filename)
    except pymcf.io.ConfigError as err:
        print('CONFIG ERROR.', err)
        raise typer.Exit(code=EXIT_CONFIG)
    except (QuadratureError, ValueError, ArithmeticError) as err:
        print('NUMERICAL FAILURE.', err)
        raise typer.Exit(code=EXIT_NUMERIC)
    print(pymcf.pipeline.series_summary(data).to_string(index=False))
    return data


def _run(command, config_filename, flow, out, threads, seed, **flags):
    try:
        schedules = {key: parse_list(text, flag) for key, (flag, text) in flags.items()}
        settings = build_settings(command, config_filename, flow, out, threads, seed, **schedules)
    except pymcf.io.ConfigError as err:
        print('CONFIG ERROR.', err)
        raise typer.Exit(code=EXIT_CONFIG)
    return execute(settings)


FLOW = typer.Option(None, '--flow', help='catalog flow name')
CONFIG = typer.Option(None, '--config', help='TOML or JSON config file')
OUT = typer.Option(None, '--out', help='output directory')
THREADS = typer.Option(None, '--threads', help='worker threads')
SEED = typer.Option(None, '--seed', help='random seed')


@app.command()
def huisken(flow: str = FLOW, t: str = typer.Option(None, '--t', help='times, e.g. -1,-4,-16'),
            config: str = CONFIG, out: str = OUT, threads: int = THREADS, seed: int = SEED):
    '''Huisken's Gaussian integral over a list of times
    '''
    _run('huisken', config, flow, out, threads, seed, times=('t', t))


@app.command()
def ecker(flow: str = FLOW, r: str = typer.Option(None, '--r', help='radii, e.g. 1,2,4,8,16'),
          config: str = CONFIG, out: str = OUT, threads: int = THREADS, seed: int = SEED):
    '''Ecker's normalised heat-ball integral over a list of radii
    '''
    _run('ecker', config, flow, out, threads, seed, radii=('r', r))


@app.command()
def entropy(flow: str = FLOW, t: str = typer.Option(None, '--t', help='slice times'),
            config: str = CONFIG, out: str = OUT, threads: int = THREADS, seed: int = SEED):
    '''Entropy of time slices
    '''
    _run('entropy', config, flow, out, threads, seed, times=('t', t))


@app.command()
def density(flow: str = FLOW, config: str = CONFIG, out: str = OUT, threads: int = THREADS,
            seed: int = SEED):
    '''Gaussian density at the space-time origin
    '''
    _run('density', config, flow, out, threads, seed)


@app.command()
def verify(flow: str = FLOW, r: str = typer.Option(None, '--r', help='radius schedule'),
           t: str = typer.Option(None, '--t', help='time schedule'),
           corollary: bool = typer.Option(True, help='also compare with the sup of the entropy'),
           config: str = CONFIG, out: str = OUT, threads: int = THREADS, seed: int = SEED):
    '''Compare the large-r Ecker limit with the large-scale Huisken limit

    Exits with 0 on PASS (or when both limits diverge) and 1 on FAIL.
    '''
    data = _run('corollary' if corollary else 'verify', config, flow, out, threads, seed,
                radii=('r', r), times=('t', t))
    report = data['results'].get('theorem1')
    if report is None:
        raise typer.Exit(code=EXIT_CONFIG)
    verdict = report.corollary or report.verdict
    print(f'{report.flow}: {verdict} (ecker {_limit(report.ecker_limit)}, '
          f'huisken {_limit(report.huisken_limit)}, entropy {_limit(report.entropy_limit)})')
    if not report.passed:
        raise typer.Exit(code=EXIT_FAIL)


def _limit(estimate):
    return 'n/a' if estimate is None else f'{estimate.limit:.6g} +/- {estimate.error:.2g}'


@app.command()
def mollifier(flow: str = FLOW, eps: str = typer.Option(None, '--eps', help='widths, e.g. 0.5,0.1,0.02'),
              r: str = typer.Option(None, '--r', help='sigma,rho of the smoothed monotonicity check'),
              config: str = CONFIG, out: str = OUT, threads: int = THREADS, seed: int = SEED):
    '''Mollifier checks for a list of widths and the smoothed monotonicity identity of the flow

    Exits with 1 when a sandwich inequality breaks or the monotonicity residual exceeds its
    tolerance.
    '''
    data = _run('mollifier', config, flow or 'circle', out, threads, seed, eps=('eps', eps),
                radii=('r', r))
    if failed(data):
        raise typer.Exit(code=EXIT_FAIL)


def failed(data):
    '''True when a verification in the pipeline data did not pass'''
    report = data['results'].get('theorem1')
    if report is not None and not report.passed:
        return True
    suite = data['series'].get('mollifier')
    if suite is not None and suite['sandwich_violations'].sum() > 0:
        return True
    table = data['series'].get('monotonicity')
    return table is not None and not table['holds'].all()


@app.command()
def generate_config(command: str, flow: str, out: str = '.', config_filename: str = None):
    '''Put an example config.toml for one command in the current directory

    Parameters
    ----------
    command : str
        huisken, ecker, entropy, density, verify, corollary or mollifier
    flow : str
        catalog flow name
    out : str
        output directory written into the config
    config_filename : str, optional
        defaults to <command>-config.toml
    '''
    try:
        pipeline_config = pymcf.pipeline.generate_config(command, flow, output_dir=out)
    except pymcf.io.ConfigError as err:
        print('CONFIG ERROR.', err)
        raise typer.Exit(code=EXIT_CONFIG)
    config_filename = config_filename or command + '-config.toml'
    with open(config_filename, "w") as toml_file:
        toml.dump(pipeline_config, toml_file)


@app.command()
def process(config_filename: str):
    '''Run a PyMCF processing pipeline based on given a config.toml
    '''
    try:
        settings = pymcf.io.load_config(config_filename)
    except pymcf.io.ConfigError as err:
        print('CONFIG ERROR.', err)
        raise typer.Exit(code=EXIT_CONFIG)
    data = execute(settings)
    if failed(data):
        raise typer.Exit(code=EXIT_FAIL)


if __name__ == "__main__":
    app()
