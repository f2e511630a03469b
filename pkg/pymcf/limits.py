'''
Verification of the large-scale limits of an ancient flow.

For an ancient flow with finite Gaussian density at -infinity, Ecker's normalised heat-ball
integral A(E_r) / r^n and Huisken's integral at time t have the same limits as r -> inf and
t -> -inf, and both equal the supremum of the entropy of the slices. These functions compute
both sides along geometric schedules and render a verdict.
'''

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import json

import numpy as np
import pandas as pd
from tqdm import tqdm

from pymcf.flows.base import hausdorff_mass, well_defined_mass
from pymcf.kernel import HeatBall
from pymcf.quad import MonotoneSeries, QuadConfig, QuadratureError
from pymcf.quantities import as_center, deficit_phi, ecker_ratio, gaussian_density, huisken_integral
from pymcf.entropy import entropy_schedule
from pymcf.io import json_default


DEFAULT_RADII = tuple(2.0**k for k in range(7))
DEFAULT_TIMES = tuple(-4.0**k for k in range(8))
DEFAULT_ENTROPY_TIMES = (-1.0, -16.0, -256.0, -4096.0, -16384.0)

# entropy values are lower bounds from an optimiser; their limit gets this extra bar
ENTROPY_SLACK = 1e-4

VERDICTS = ('PASS', 'FAIL', 'BOTH_DIVERGE')


def check_schedule(values, name, sign):
    '''Validate a geometric schedule with at least 5 points and growing |values|

    ``sign`` is +1 for radii and -1 for times.
    '''
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 5:
        raise ValueError(f'{name} schedule needs at least 5 points, got {v.size}')
    if not np.all(sign * v > 0):
        raise ValueError(f'{name} schedule values must all have sign {sign:+d}')
    ratios = v[1:] / v[:-1]
    if not np.all(ratios > 1):
        raise ValueError(f'{name} schedule must grow in magnitude: {v.tolist()}')
    if not np.allclose(ratios, ratios[0], rtol=1e-9, atol=0):
        raise ValueError(f'{name} schedule is not geometric: ratios {ratios.tolist()}')
    return v


def _map_points(fn, points, cfg, desc=None, verbose=False):
    '''fn(point, cfg) for every point, returning (report, error) pairs in schedule order'''
    inner = replace(cfg, threads=1) if cfg.threads > 1 else cfg

    def run(point):
        try:
            return fn(point, inner), None
        except QuadratureError as err:
            return None, str(err)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(run, points))
    return [run(p) for p in tqdm(points, desc=desc, disable=not verbose)]


def _series(parameter, schedule, outcomes, failures, label):
    values, errors, converged = [], [], []
    for point, (report, message) in zip(schedule, outcomes):
        if report is None:
            failures.append(dict(series=label, parameter=float(point), message=message))
            values.append(np.nan)
            errors.append(np.nan)
            converged.append(False)
        else:
            values.append(report.value)
            errors.append(report.error_estimate)
            converged.append(report.converged)
    return MonotoneSeries(parameter, schedule, values, errors, direction=1,
                          converged=np.array(converged))


def _finite_limit(series, slack):
    '''Limit over the computed points of a series, None if fewer than 3 survive'''
    ok = np.isfinite(series.values)
    if ok.sum() < 3:
        return None, False
    kept = MonotoneSeries(series.parameter, series.schedule[ok], series.values[ok],
                          series.errors[ok], direction=series.direction)
    estimate = kept.limit(slack=slack)
    return estimate, kept.is_monotone(slack=slack)


@dataclass
class Theorem1Report:
    '''Both monotone quantities of one flow along their schedules, with limits and verdict

    Attributes:
        flow            : flow name
        ecker           : A(E_r) / r^n along the radii
        huisken        : Huisken integral along the (decreasing) times
        ecker_limit     : extrapolated r -> inf limit (None if too many points failed)
        huisken_limit   : extrapolated t -> -inf limit
        verdict         : 'PASS', 'FAIL' or 'BOTH_DIVERGE'
        margin          : combined error bar minus the gap between the limits
        ecker_monotone  : the Ecker series is non-decreasing within the noise floor
        huisken_monotone : the Huisken series is non-decreasing as t decreases
        ordering        : A(E_r) / r^n against the Huisken integral at t = -r^2/4
        finiteness      : mass checks of the slices
        failures        : schedule points whose quadrature failed
        entropy         : entropy schedule (set by :func:`verify_corollary32`)
        entropy_limit   : sup of the entropy
        corollary       : three-way verdict (set by :func:`verify_corollary32`)
    '''
    flow: str
    ecker: MonotoneSeries
    huisken: MonotoneSeries
    ecker_limit: object
    huisken_limit: object
    verdict: str
    margin: float
    ecker_monotone: bool
    huisken_monotone: bool
    ordering: pd.DataFrame
    finiteness: dict
    failures: list = field(default_factory=list)
    entropy: object = None
    entropy_limit: object = None
    corollary: str = None

    @property
    def passed(self):
        verdict = self.verdict if self.corollary is None else self.corollary
        return verdict in ('PASS', 'BOTH_DIVERGE')

    @property
    def ordering_holds(self):
        return bool(self.ordering['holds'].all()) if len(self.ordering) else True

    def frames(self):
        '''Series tables for CSV output'''
        frames = dict(ecker=self.ecker.to_frame(), huisken=self.huisken.to_frame(),
                      ordering=self.ordering)
        if self.entropy is not None:
            frames['entropy'] = self.entropy.to_frame()
        return frames

    def to_dict(self):
        def limit(estimate):
            return None if estimate is None else asdict(estimate)

        margin = self.margin if np.isfinite(self.margin) else None
        out = dict(flow=self.flow, verdict=self.verdict, margin=margin,
                   ecker_limit=limit(self.ecker_limit), huisken_limit=limit(self.huisken_limit),
                   ecker_monotone=self.ecker_monotone, huisken_monotone=self.huisken_monotone,
                   ordering_holds=self.ordering_holds, finiteness=self.finiteness,
                   failures=self.failures,
                   series={name: frame.to_dict(orient='list') for name, frame in self.frames().items()})
        if self.corollary is not None:
            out.update(corollary=self.corollary, entropy_limit=limit(self.entropy_limit),
                       entropy_monotone=self.entropy.monotone)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, default=json_default)


def _verdict(first, second, extra):
    '''PASS / FAIL / BOTH_DIVERGE and the margin for two limit estimates'''
    if first is None or second is None:
        return 'FAIL', float('-inf')
    if first.diverges and second.diverges:
        return 'BOTH_DIVERGE', float('inf')
    if first.diverges or second.diverges:
        return 'FAIL', float('-inf')
    margin = first.error + second.error + extra - abs(first.limit - second.limit)
    return ('PASS' if margin >= 0 else 'FAIL'), float(margin)


def verify_theorem1(flow, radii=DEFAULT_RADII, times=DEFAULT_TIMES, cfg=None, noise_floor=1e-6,
                    verbose=False):
    '''Compare the r -> inf limit of A(E_r) / r^n with the t -> -inf limit of the Huisken integral

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    radii : array
        increasing geometric schedule of heat-ball radii, at least 5 points
    times : array
        decreasing geometric schedule of negative times, at least 5 points
    cfg : :class:`pymcf.quad.QuadConfig`
    noise_floor : float
        slack of the monotonicity and ordering checks, also added to the combined error bar
    verbose : bool
        show progress over the schedules

    Returns
    -------
    :class:`Theorem1Report`

    A quadrature failure at a schedule point is recorded in ``failures`` and degrades the
    verdict; the remaining points are still computed.
    '''
    cfg = cfg or QuadConfig()
    radii = check_schedule(radii, 'radius', +1)
    times = check_schedule(times, 'time', -1)
    failures = []

    ecker_out = _map_points(lambda r, c: ecker_ratio(flow, r, c), radii, cfg, 'ecker', verbose)
    ecker = _series('r', radii, ecker_out, failures, 'ecker')
    huisken_out = _map_points(lambda t, c: huisken_integral(flow, t, None, c), times, cfg,
                              'huisken', verbose)
    huisken = _series('t', times, huisken_out, failures, 'huisken')

    ecker_limit, ecker_monotone = _finite_limit(ecker, noise_floor)
    huisken_limit, huisken_monotone = _finite_limit(huisken, noise_floor)
    verdict, margin = _verdict(ecker_limit, huisken_limit, noise_floor)
    if failures and verdict == 'PASS':
        verdict = 'FAIL'

    # A(E_r) / r^n is bounded by the Huisken integral at t = -r^2/4
    paired = -radii**2 / 4
    paired_out = _map_points(lambda t, c: huisken_integral(flow, t, None, c), paired, cfg,
                             'ordering', verbose)
    rows = []
    for r, t, value, (report, message) in zip(radii, paired, ecker.values, paired_out):
        bound = np.nan if report is None else report.value
        rows.append(dict(r=r, t=t, ecker=value, huisken=bound,
                         holds=bool(value <= bound + noise_floor) if np.isfinite(value + bound) else False))
        if report is None:
            failures.append(dict(series='ordering', parameter=float(t), message=message))
    ordering = pd.DataFrame(rows, columns=['r', 't', 'ecker', 'huisken', 'holds'])

    finiteness = mass_checks(flow, radii, times, cfg)
    if not finiteness['finite']:
        print(f'WARNING. verify_theorem1({flow.name}): a mass check is not finite')

    report = Theorem1Report(flow=flow.name, ecker=ecker, huisken=huisken, ecker_limit=ecker_limit,
                            huisken_limit=huisken_limit, verdict=verdict, margin=margin,
                            ecker_monotone=ecker_monotone, huisken_monotone=huisken_monotone,
                            ordering=ordering, finiteness=finiteness, failures=failures)
    if not (ecker_monotone and huisken_monotone and report.ordering_holds):
        print(f'WARNING. verify_theorem1({flow.name}): monotonicity or ordering violated')
    return report


def mass_checks(flow, radii, times, cfg=None):
    '''Slice masses behind the finiteness condition

    ``well_defined``: mass of M_{-r^2/4pi} in B_{sqrt(2n/pi) r} for every radius.
    ``ancient``: mass of M_t in B_{2 sqrt(-2nt)} for every time.
    '''
    cfg = cfg or QuadConfig()
    n = flow.n

    def mass(fn):
        try:
            return float(fn())
        except QuadratureError:
            return float('nan')

    well_defined = [mass(lambda: well_defined_mass(flow, r, cfg)) for r in radii]
    ancient = [mass(lambda: hausdorff_mass(flow, t, np.zeros(flow.N), 2 * np.sqrt(-2 * n * t), cfg))
               for t in times]
    finite = bool(np.all(np.isfinite(well_defined)) and np.all(np.isfinite(ancient)))
    return dict(radii=list(map(float, radii)), well_defined=well_defined,
                times=list(map(float, times)), ancient=ancient, finite=finite)


def verify_corollary32(flow, cfg=None, report=None, entropy_times=DEFAULT_ENTROPY_TIMES,
                       starts=5, seed=0, **theorem1):
    '''Three-way agreement of the Ecker limit, the Huisken limit and sup of the entropy

    Runs :func:`verify_theorem1` unless a ``report`` is given, then adds the entropy schedule
    and sets ``report.corollary``. The corollary verdict is FAIL whenever the theorem verdict is.
    '''
    cfg = cfg or QuadConfig()
    if report is None:
        report = verify_theorem1(flow, cfg=cfg, **theorem1)
    schedule = entropy_schedule(flow, sorted(entropy_times, reverse=True), cfg, slack=ENTROPY_SLACK,
                                starts=starts, seed=seed)
    report.entropy = schedule
    report.entropy_limit = schedule.sup

    if report.verdict == 'BOTH_DIVERGE':
        sup = schedule.sup
        report.corollary = 'BOTH_DIVERGE' if sup is not None and sup.diverges else 'FAIL'
    elif report.verdict != 'PASS' or schedule.sup is None:
        report.corollary = 'FAIL'
    else:
        with_ecker, _ = _verdict(schedule.sup, report.ecker_limit, ENTROPY_SLACK)
        with_huisken, _ = _verdict(schedule.sup, report.huisken_limit, ENTROPY_SLACK)
        report.corollary = 'PASS' if with_ecker == with_huisken == 'PASS' else 'FAIL'
    if not schedule.monotone:
        print(f'WARNING. verify_corollary32({flow.name}): entropy not monotone along the schedule')
    return report


def verify_integrated_huisken(flow, tau, theta, cfg=None, center=None):
    '''Integrated monotonicity formula: Huisken(theta) - Huisken(tau) = -iint_{[tau, theta]} D Phi

    Both sides come from independent quadratures.

    Returns
    -------
    dict with 'lhs', 'rhs', 'residual', 'relative' and 'error'
    '''
    cfg = cfg or QuadConfig()
    t0 = 0.0 if center is None else float(center[1])
    if not tau < theta < t0:
        raise ValueError(f'verify_integrated_huisken needs tau < theta < t0, got {tau}, {theta}, {t0}')
    late = huisken_integral(flow, theta, center, cfg)
    early = huisken_integral(flow, tau, center, cfg)
    deficit = deficit_phi(flow, tau, theta, center, cfg)
    lhs = late.value - early.value
    rhs = -deficit.value
    residual = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    return dict(lhs=lhs, rhs=rhs, residual=residual, relative=residual / scale if scale > 0 else 0.0,
                error=late.error_estimate + early.error_estimate + deficit.error_estimate)


def verify_deficit_budget(flow, t_far, cfg=None, center=None):
    '''Huisken(t_far) - Theta(x0, t0) against the deficit integrated over [t_far, t0]

    Returns
    -------
    dict with 'huisken', 'density', 'deficit', 'residual', 'relative' and 'error'
    '''
    cfg = cfg or QuadConfig()
    t0 = 0.0 if center is None else float(center[1])
    if not t_far < t0:
        raise ValueError(f'verify_deficit_budget needs t_far < t0, got {t_far}, {t0}')
    far = huisken_integral(flow, t_far, center, cfg)
    density = gaussian_density(flow, center, cfg)
    deficit = deficit_phi(flow, t_far, t0, center, cfg)
    drop = far.value - density.value
    residual = abs(drop - deficit.value)
    scale = max(abs(drop), abs(deficit.value))
    return dict(huisken=far.value, density=density.value, deficit=deficit.value, residual=residual,
                relative=residual / scale if scale > 0 else 0.0,
                error=far.error_estimate + density.error_estimate + deficit.error_estimate)


def limit_at_zero(flow, radii=(1 / 8, 1 / 16), cfg=None, center=None):
    '''A(E_r) / r^n at small radii against the Gaussian density at the centre

    Returns
    -------
    dict with 'radii', 'values', 'density', 'gaps' and 'decreasing' (the gap does not grow
    as r decreases, up to the quadrature errors)
    '''
    cfg = cfg or QuadConfig()
    x0, t0 = as_center(flow, center)
    radii = sorted((float(r) for r in radii), reverse=True)
    if not radii or radii[-1] <= 0:
        raise ValueError(f'limit_at_zero needs positive radii, got {radii}')
    density = gaussian_density(flow, (x0, t0), cfg)
    reports = [ecker_ratio(flow, HeatBall(r=r, n=flow.n, x0=x0, t0=t0), cfg) for r in radii]
    values = np.array([rep.value for rep in reports])
    errors = np.array([rep.error_estimate for rep in reports]) + density.error_estimate
    gaps = np.abs(values - density.value)
    decreasing = bool(np.all(gaps[1:] <= gaps[:-1] + errors[1:] + errors[:-1]))
    return dict(radii=radii, values=values.tolist(), density=density.value, gaps=gaps.tolist(),
                errors=errors.tolist(), decreasing=decreasing)


class VerifyTheorem1():
    '''Pipeline step: Ecker and Huisken limits of the flow

    Pipeline input data:
    --------------------
    :class:`pymcf.pipeline.Data` containing ``flow`` and ``cfg``

    Returns:
    --------
    :class:`pymcf.pipeline.Data` with ``results['theorem1']`` (a :class:`Theorem1Report`) and
    its series under ``series``

    Example config:

    .. code-block:: toml

        [steps.verify]
        pipeline_class = 'pymcf.limits.VerifyTheorem1'
        radii = [1, 2, 4, 8, 16, 32, 64]
        times = [-1, -4, -16, -64, -256, -1024, -4096, -16384]
    '''

    def __init__(self, radii=DEFAULT_RADII, times=DEFAULT_TIMES, noise_floor=1e-6):
        self.radii = check_schedule(radii, 'radius', +1).tolist()
        self.times = check_schedule(times, 'time', -1).tolist()
        self.noise_floor = float(noise_floor)

    def __call__(self, data):
        report = verify_theorem1(data['flow'], self.radii, self.times, data['cfg'],
                                 noise_floor=self.noise_floor)
        data['results']['theorem1'] = report
        for name, frame in report.frames().items():
            data['series'][f'theorem1_{name}'] = frame
        return data


class VerifyCorollary32(VerifyTheorem1):
    '''Pipeline step: :class:`VerifyTheorem1` plus the sup of the entropy

    Reuses ``results['theorem1']`` when an earlier step produced it.

    Example config:

    .. code-block:: toml

        [steps.corollary]
        pipeline_class = 'pymcf.limits.VerifyCorollary32'
        entropy_times = [-1, -16, -256, -4096, -16384]
    '''

    def __init__(self, entropy_times=DEFAULT_ENTROPY_TIMES, starts=5, **theorem1):
        super().__init__(**theorem1)
        self.entropy_times = [float(t) for t in entropy_times]
        self.starts = int(starts)
        if not all(t < 0 for t in self.entropy_times) or self.starts < 1:
            raise ValueError('entropy_times must be negative and starts at least 1')

    def __call__(self, data):
        report = data['results'].get('theorem1')
        if report is None:
            report = verify_theorem1(data['flow'], self.radii, self.times, data['cfg'],
                                     noise_floor=self.noise_floor)
        report = verify_corollary32(data['flow'], data['cfg'], report, self.entropy_times,
                                    starts=self.starts, seed=data.get('seed', 0))
        data['results']['theorem1'] = report
        for name, frame in report.frames().items():
            data['series'][f'theorem1_{name}'] = frame
        return data
