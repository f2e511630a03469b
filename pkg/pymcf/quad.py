'''
Adaptive quadrature for slice integrals, heat-ball integrals and improper limits.

The engine is a vectorised adaptive Gauss-Kronrod (7/15 point) rule on dyadic subdivision:
every refinement pass evaluates all active intervals in one call of the integrand, which keeps
numpy doing the work. Slice integrals over rotationally symmetric surfaces reduce to integrals
along the profile curve, with an angular Gauss-Legendre rule when the ball centre is off axis.

Heat-ball integrals substitute t = t0 - (r^2/4pi) a, a = 1/(1 + exp(-s)), so that both window
endpoints (where the slice radius vanishes) are exponentially stretched in s.
'''

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, asdict, replace

import numpy as np
import pandas as pd
from scipy.special import expit

from pymcf.flows.base import angular_arc, restrict_to_ball, split_at_breakpoints, evaluate_geometry
from pymcf.kernel import HeatBall


# Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15)
XGK = np.array([0.991455371120812639, 0.949107912342758525, 0.864864423359769073,
                0.741531185599394440, 0.586087235467691130, 0.405845151377397167,
                0.207784955007898468, 0.000000000000000000])
WGK = np.array([0.022935322010529225, 0.063092092629978553, 0.104790010322250184,
                0.140653259715525919, 0.169004726639267903, 0.190350578064785410,
                0.204432940075298892, 0.209482141084727828])
WG = np.array([0.129484966168869693, 0.279705391489276668, 0.381830050505118945,
               0.417959183673469388])

NODES = np.concatenate([-XGK[:-1], XGK[::-1]])
KRONROD = np.concatenate([WGK[:-1], WGK[::-1]])
GAUSS = np.zeros(15)
GAUSS[[1, 3, 5]] = WG[:3]
GAUSS[7] = WG[3]
GAUSS[[13, 11, 9]] = WG[:3]

EPMACH = np.finfo(np.float64).eps


class QuadratureError(RuntimeError):
    '''A quadrature did not reach its tolerance; ``result`` holds the diagnostics'''

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class QuadConfig:
    '''Numerical settings shared by every integral

    Attributes:
        rel_tol            : relative tolerance
        abs_tol            : absolute tolerance
        max_depth          : maximum bisection depth of a single interval
        gaussian_truncation: Gaussian weights below this fraction of their peak are dropped
        time_substitution  : heat-ball time mapping ('logistic')
        window_floor       : heat-ball windows are integrated over a in [floor, 1 - floor]
        initial_cells      : cells each integration interval is cut into before adapting
        scan_cells         : cells of the ball-restriction scan grid
        theta_nodes        : Gauss-Legendre nodes across an angular arc
        limit              : maximum number of subintervals of one adaptive integral
        fail_rel_tol       : non-converged results with a larger relative error raise
        singular_min_depth : flows through the heat-ball centre are refined to t-width
                             window * 2**-singular_min_depth over the last decade of the window
        threads            : worker threads for the slice integrals of a heat-ball integral
    '''
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_depth: int = 40
    gaussian_truncation: float = 1e-16
    time_substitution: str = 'logistic'
    window_floor: float = 1e-18
    initial_cells: int = 8
    scan_cells: int = 512
    theta_nodes: int = 48
    limit: int = 4000
    fail_rel_tol: float = 1e-3
    singular_min_depth: int = 12
    threads: int = 1

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError('quadrature tolerances must be positive')
        if self.max_depth < 4:
            raise ValueError('max_depth must be at least 4')
        if not 0 < self.gaussian_truncation < 1:
            raise ValueError('gaussian_truncation must lie in (0, 1)')
        if self.time_substitution != 'logistic':
            raise ValueError(f'unknown time substitution {self.time_substitution!r}')
        if not 0 < self.window_floor < 1e-3:
            raise ValueError('window_floor must lie in (0, 1e-3)')
        if self.initial_cells < 1 or self.scan_cells < 8 or self.theta_nodes < 4:
            raise ValueError('initial_cells >= 1, scan_cells >= 8 and theta_nodes >= 4 required')
        if self.threads < 1:
            raise ValueError('threads must be >= 1')

    @classmethod
    def from_dict(cls, settings):
        '''Build from a config mapping, rejecting unknown keys'''
        settings = dict(settings or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(settings) - known)
        if unknown:
            raise ValueError(f'unknown quadrature settings: {unknown}')
        return cls(**settings)

    def to_dict(self):
        return asdict(self)

    def tightened(self, factor=10.0):
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)

    @property
    def truncation_log(self):
        '''log(1/delta)'''
        return float(-np.log(self.gaussian_truncation))


@dataclass
class QuadResult:
    '''Value of an integral with its error estimate

    ``value`` and ``error_estimate`` are floats, or arrays for vector-valued integrands.
    '''
    value: object
    error_estimate: object
    evaluations: int = 0
    converged: bool = True
    intervals: int = 0

    def relative_error(self):
        value = np.max(np.abs(np.atleast_1d(self.value)))
        error = np.max(np.atleast_1d(self.error_estimate))
        if value == 0:
            return float(error)
        return float(error / value)

    def checked(self, cfg, label='integral'):
        '''Raise :class:`QuadratureError` for failed results, print a warning for marginal ones'''
        if self.converged:
            return self
        rel = self.relative_error()
        if rel > cfg.fail_rel_tol and np.max(np.atleast_1d(self.error_estimate)) > cfg.abs_tol:
            raise QuadratureError(f'{label} did not converge: value {self.value}, '
                                  f'error estimate {self.error_estimate} '
                                  f'({self.evaluations} evaluations, {self.intervals} intervals)',
                                  result=self)
        print(f'WARNING. {label} not converged to tolerance (relative error {rel:.2e})')
        return self

    def __add__(self, other):
        return QuadResult(value=self.value + other.value,
                          error_estimate=self.error_estimate + other.error_estimate,
                          evaluations=self.evaluations + other.evaluations,
                          converged=self.converged and other.converged,
                          intervals=self.intervals + other.intervals)

    def scaled(self, factor):
        return replace(self, value=self.value * factor, error_estimate=self.error_estimate * abs(factor))

    def component(self, i):
        '''Scalar result for component i of a vector-valued integral'''
        return replace(self, value=float(np.asarray(self.value)[i]),
                       error_estimate=float(np.asarray(self.error_estimate)[i]))


def zero_result(shape=()):
    zero = np.zeros(shape) if shape else 0.0
    return QuadResult(value=zero, error_estimate=zero if not shape else np.zeros(shape))


def _gk_pass(f, a, b, passive=0):
    '''One Gauss-Kronrod pass over the intervals [a_i, b_i]: (kronrod, error, resabs) per interval

    The last ``passive`` components are integrated but left out of the scalar error and resabs.
    '''
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = (center[:, None] + half[:, None] * NODES[None, :]).ravel()
    values = np.asarray(f(nodes), dtype=np.float64)
    tail = values.shape[1:]
    values = values.reshape((len(a), 15) + tail)
    wk = KRONROD.reshape((1, 15) + (1,) * len(tail))
    wg = GAUSS.reshape((1, 15) + (1,) * len(tail))
    h = half.reshape((len(a),) + (1,) * len(tail))
    kronrod = h * np.sum(wk * values, axis=1)
    gauss = h * np.sum(wg * values, axis=1)
    mean = kronrod / np.where(h == 0, 1.0, 2 * h)
    resasc = np.abs(h) * np.sum(wk * np.abs(values - mean[:, None]), axis=1)
    resabs = np.abs(h) * np.sum(wk * np.abs(values), axis=1)
    err = np.abs(kronrod - gauss)
    with np.errstate(divide='ignore', invalid='ignore'):
        scaled = resasc * np.minimum(1.0, (200 * err / resasc)**1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * EPMACH * resabs)
    if tail:
        axes = tuple(range(1, 1 + len(tail)))
        active_err, active_abs = _active(err, passive), _active(resabs, passive)
        return kronrod, err, np.max(active_err, axis=axes), np.max(active_abs, axis=axes)
    return kronrod, err, err, resabs


def _active(values, passive):
    return values[..., :-passive] if passive else values


def adaptive_gauss_kronrod(f, intervals, rel_tol=1e-8, abs_tol=1e-12, max_depth=40, limit=4000,
                           initial_cells=1, force_split=None, passive=0):
    '''Adaptive G7/K15 quadrature over a union of finite intervals

    Parameters
    ----------
    f : callable
        vectorised integrand, maps an array of nodes (M,) to values (M,) or (M, k)
    intervals : list of (a, b)
        finite, disjoint integration intervals
    rel_tol, abs_tol : float
        target max(rel_tol |I|, abs_tol) on the total error
    max_depth : int
        intervals are never bisected more than this many times
    limit : int
        maximum number of live subintervals
    initial_cells : int
        uniform cells each interval is cut into first
    force_split : callable, optional
        ``force_split(a, b) -> bool array`` marking subintervals that must be bisected
        regardless of their error
    passive : int
        number of trailing components of a (M, k) integrand that are integrated on the
        same subintervals but take no part in the tolerance and convergence decisions

    Returns
    -------
    :class:`QuadResult`
    '''
    starts, ends = [], []
    for lo, hi in intervals:
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError('adaptive_gauss_kronrod needs finite intervals')
        if hi > lo:
            cuts = np.linspace(lo, hi, initial_cells + 1)
            starts.append(cuts[:-1])
            ends.append(cuts[1:])
    if not starts:
        return zero_result()
    a = np.concatenate(starts)
    b = np.concatenate(ends)
    depth = np.zeros(len(a), dtype=int)
    width = float(np.sum(b - a))

    done_a, done_k, done_e = [], [], []
    evaluations = 0
    converged = True
    while len(a):
        kronrod, err, err_scalar, resabs = _gk_pass(f, a, b, passive)
        evaluations += 15 * len(a)
        done_total = np.sum(done_k, axis=0) if done_k else 0.0
        done_err = np.sum(done_e, axis=0) if done_e else 0.0
        total = _active(done_total + np.sum(kronrod, axis=0), passive)
        total_err = np.max(np.atleast_1d(_active(done_err + np.sum(err, axis=0), passive)))
        tol = max(abs_tol, rel_tol * float(np.max(np.abs(np.atleast_1d(total)))))

        forced = np.zeros(len(a), dtype=bool)
        if force_split is not None:
            forced = np.asarray(force_split(a, b), dtype=bool)

        local_ok = (err_scalar <= tol * (b - a) / width) | (err_scalar <= 50 * EPMACH * resabs)
        if total_err <= tol:
            split = forced
        else:
            split = ~local_ok | forced
        at_depth = depth >= max_depth
        if np.any(split & at_depth & ~local_ok):
            converged = False
        split &= ~at_depth

        live = len(done_a) + len(a)
        room = limit - live
        if np.count_nonzero(split) > room:
            if room <= 0:
                split[:] = False
            else:
                order = np.argsort(-np.where(split, err_scalar, -np.inf), kind='stable')
                keep = np.zeros(len(a), dtype=bool)
                keep[order[:room]] = True
                split &= keep
            if total_err > tol:
                converged = False

        accept = ~split
        done_a.extend(a[accept])
        done_k.extend(kronrod[accept])
        done_e.extend(err[accept])

        mid = 0.5 * (a[split] + b[split])
        a, b = np.concatenate([a[split], mid]), np.concatenate([mid, b[split]])
        depth = np.concatenate([depth[split], depth[split]]) + 1

    order = np.argsort(np.asarray(done_a), kind='stable')
    value = np.sum(np.asarray(done_k)[order], axis=0)
    error = np.sum(np.asarray(done_e)[order], axis=0)
    tol = max(abs_tol, rel_tol * float(np.max(np.abs(np.atleast_1d(_active(value, passive))))))
    if np.max(np.atleast_1d(_active(error, passive))) > tol:
        converged = False
    if np.ndim(value) == 0:
        value, error = float(value), float(error)
    return QuadResult(value=value, error_estimate=error, evaluations=evaluations,
                      converged=converged, intervals=len(done_a))


def nested_rows(results, tail):
    '''Stack inner results as rows of (value..., error) for an outer pass with ``passive=1``

    ``None`` entries are empty slices. Returns the rows and whether every inner result converged.
    '''
    width = (tail[0] if tail else 1) + 1
    rows = np.zeros((len(results), width))
    converged = True
    for row, result in zip(rows, results):
        if result is None:
            continue
        row[:-1] = np.ravel(result.value)
        row[-1] = np.max(result.error_estimate)
        converged = converged and result.converged
    return rows, converged


def nested_result(result, tail, inner_converged=True):
    '''Outer result of a nested quadrature whose last component integrates the inner error bars

    The integrated inner error is added to the outer error estimate. The result is not converged
    if any inner integral failed.
    '''
    value = np.atleast_1d(np.asarray(result.value, dtype=np.float64))
    error = np.atleast_1d(np.asarray(result.error_estimate, dtype=np.float64))
    if value.size == 1:
        return zero_result(tail)
    inner = abs(float(value[-1]))
    value, error = value[:-1], error[:-1] + inner
    if not tail:
        value, error = float(value[0]), float(error[0])
    return replace(result, value=value, error_estimate=error,
                   converged=result.converged and inner_converged)


def gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def gaussian_radius(tau, cfg):
    '''Radius beyond which exp(|x|^2/(4 tau)) < delta'''
    return float(np.sqrt(4 * abs(tau) * cfg.truncation_log))


def gaussian_restriction(flow, t, center, cfg):
    '''Ball restriction of M_t carrying the Gaussian weight centred at (x0, t0) up to delta'''
    x0, t0 = center
    return restrict_to_ball(flow, t, x0, gaussian_radius(t - t0, cfg), scan_cells=cfg.scan_cells)


def _weighted(values, area):
    values = np.asarray(values, dtype=np.float64)
    return values * area.reshape((-1,) + (1,) * (values.ndim - 1))


def integrate_slice(flow, t, integrand, restriction=None, cfg=None):
    '''Integral of ``integrand`` over the time slice M_t (or its part inside a ball)

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    t : float
        slice time
    integrand : callable
        maps a :class:`pymcf.flows.base.SliceGeometry` of m points to values of shape (m,)
        or (m, k); the area element is applied here. When the restriction centre is on the
        symmetry axis of a rotational flow, the integrand must be invariant under rotations
        about that axis.
    restriction : :class:`pymcf.flows.base.BallRestriction`, optional
        integrate only over M_t inside the ball; required for unbounded charts
    cfg : :class:`QuadConfig`

    Returns
    -------
    :class:`QuadResult` (flagged ``converged=False`` rather than raising)
    '''
    cfg = cfg or QuadConfig()
    flow.check_time(t)
    if restriction is None:
        if not flow.chart.bounded:
            raise ValueError(f'{flow.name} has an unbounded chart: integrate_slice needs a ball restriction')
        intervals = [(flow.chart.lower, flow.chart.upper)]
        mode = 'circle' if flow.rotational else 'plain'
    else:
        intervals = restriction.intervals
        if flow.rotational:
            mode = 'arc' if restriction.angular else 'axis'
        else:
            mode = 'plain'
    intervals = split_at_breakpoints(flow, intervals)
    if not intervals:
        return zero_result()

    if mode == 'plain':
        def f(u):
            geom = evaluate_geometry(flow, u[:, None], t, check_chart=False)
            return _weighted(integrand(geom), geom.area)
    elif mode == 'axis':
        def f(u):
            params = np.stack([u, np.zeros_like(u)], axis=-1)
            geom = evaluate_geometry(flow, params, t, check_chart=False)
            return 2 * np.pi * _weighted(integrand(geom), geom.area)
    else:
        k = cfg.theta_nodes
        if mode == 'circle':
            unit = np.arange(k) / k
            unit_w = np.full(k, 1.0 / k)
        else:
            unit, unit_w = gauss_legendre(k)

        def f(u):
            if mode == 'circle':
                theta = 2 * np.pi * np.broadcast_to(unit, (len(u), k))
                weights = 2 * np.pi * np.broadcast_to(unit_w, (len(u), k))
            else:
                phi_c, half = angular_arc(flow, u, t, restriction.center, restriction.radius)
                theta = phi_c[:, None] + half[:, None] * unit[None, :]
                weights = half[:, None] * unit_w[None, :]
            params = np.stack([np.repeat(u, k), theta.ravel()], axis=-1)
            geom = evaluate_geometry(flow, params, t, check_chart=False)
            values = _weighted(integrand(geom), geom.area)
            values = values.reshape((len(u), k) + values.shape[1:])
            w = weights.reshape((len(u), k) + (1,) * (values.ndim - 2))
            return np.sum(w * values, axis=1)

    return adaptive_gauss_kronrod(f, intervals, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                                  max_depth=cfg.max_depth, limit=cfg.limit,
                                  initial_cells=cfg.initial_cells)


@dataclass(frozen=True)
class WindowMap:
    '''Logistic substitution of a heat-ball time window

    t = t0 - D a(s), a = expit(s), D = r^2/(4pi). Slice radii are formed from a and log a
    directly so that neither window end loses precision.
    '''
    hb: HeatBall
    floor: float

    @property
    def bounds(self):
        s_max = float(np.log1p(-self.floor) - np.log(self.floor))
        return -s_max, s_max

    def a(self, s):
        return expit(s)

    def tau(self, s):
        return -self.hb.duration * expit(s)

    def jacobian(self, s):
        return self.hb.duration * expit(s) * expit(-s)

    def radius(self, s):
        # R^2 = 2 n tau log(a) = 2 n D a log(1 + exp(-s))
        a = expit(s)
        softplus = np.logaddexp(0.0, -np.asarray(s, dtype=np.float64))
        return np.sqrt(2 * self.hb.n * self.hb.duration * a * softplus)

    def s_of_tau(self, tau):
        a = -tau / self.hb.duration
        return float(np.log(a) - np.log1p(-a))


def fit_heatball(flow, hb):
    '''Check ``hb`` against the flow dimensions; a zero centre is widened to R^N'''
    if hb.n != flow.n:
        raise ValueError(f'heat-ball dimension n = {hb.n} does not match {flow.name} (n = {flow.n})')
    if hb.x0.size != flow.N:
        if np.any(hb.x0):
            raise ValueError(f'heat-ball centre has dimension {hb.x0.size}, flow lives in R^{flow.N}')
        hb = HeatBall(r=hb.r, n=hb.n, x0=np.zeros(flow.N), t0=hb.t0)
    return hb


def passes_through_center(flow, hb):
    return bool(flow.reaches_origin_at_zero and hb.t0 == 0.0 and not np.any(hb.x0))


def integrate_heatball(flow, hb, integrand, cfg=None, size=None, until=None):
    '''Space-time integral of ``integrand`` over the part of the flow inside the heat-ball

    The outer time integral runs over the logistic substitution of the window; every time
    node integrates the slice inside the ball B_{R_r(t)}(x0) with :func:`integrate_slice`.

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    hb : :class:`pymcf.kernel.HeatBall`
    integrand : callable
        ``integrand(geom, tau)`` with tau = t - t0 < 0, returning (m,) values, or (m, size)
    cfg : :class:`QuadConfig`
    size : int, optional
        number of components of a vector-valued integrand
    until : float, optional
        integrate only over times t <= until (absolute time)

    Returns
    -------
    :class:`QuadResult`
    '''
    cfg = cfg or QuadConfig()
    hb = fit_heatball(flow, hb)
    window = WindowMap(hb, cfg.window_floor)
    tail = () if size is None else (int(size),)
    if hb.t0 - hb.duration >= flow.t_max:
        return zero_result(tail)
    inner_cfg = replace(cfg, rel_tol=cfg.rel_tol / 10)

    def slice_value(s):
        tau = float(window.tau(s))
        t = hb.t0 + tau
        if not t < flow.t_max:
            return None
        R = float(window.radius(s))
        restriction = restrict_to_ball(flow, t, hb.x0, R, scan_cells=cfg.scan_cells)
        if restriction.empty:
            return None
        return integrate_slice(flow, t, lambda geom: integrand(geom, tau), restriction, inner_cfg)

    inner_converged = []

    def f(s_nodes):
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(slice_value, s_nodes))
        else:
            results = [slice_value(s) for s in s_nodes]
        rows, converged = nested_rows(results, tail)
        inner_converged.append(converged)
        return rows * window.jacobian(s_nodes)[:, None]

    force = None
    if passes_through_center(flow, hb):
        s_decade = window.s_of_tau(-hb.duration / 10)
        max_width = 2.0**-cfg.singular_min_depth

        def force(a, b):
            return (a < s_decade) & (expit(b) - expit(a) > max_width)

    lo, hi = window.bounds
    if until is not None and until < hb.t0:
        if until <= hb.t0 - hb.duration:
            return zero_result(tail)
        lo = max(lo, window.s_of_tau(until - hb.t0))
        if not hi > lo:
            return zero_result(tail)
    result = adaptive_gauss_kronrod(f, [(lo, hi)], rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                                    max_depth=cfg.max_depth, limit=cfg.limit,
                                    initial_cells=cfg.initial_cells, force_split=force, passive=1)
    return nested_result(result, tail, all(inner_converged))


@dataclass
class LimitEstimate:
    '''Extrapolated limit of a monotone sequence

    Attributes:
        limit         : geometric-tail (Aitken) extrapolation, or the last value
        error         : max(|limit - last|, |last - previous|)
        last          : last value of the sequence
        tail          : last - previous
        ratio         : ratio of the last two increments (nan if undefined)
        monotone      : False if the sequence turns back beyond the slack
        direction     : +1 increasing, -1 decreasing, 0 constant
        diverges      : large value with slowly decaying increments
    '''
    limit: float
    error: float
    last: float
    tail: float
    ratio: float
    monotone: bool
    direction: int
    diverges: bool = False

    def agrees_with(self, other, extra=0.0):
        return abs(self.limit - other.limit) <= self.error + other.error + extra


# divergence rule for limits: value beyond this with increment ratio >= DIVERGENCE_RATIO
DIVERGENCE_VALUE = 1e6
DIVERGENCE_RATIO = 0.5


def improper_limit(values, direction=None, slack=1e-6):
    '''Limit estimate of a sequence sampled along a geometric schedule

    Parameters
    ----------
    values : array
        at least 3 schedule values, in schedule order
    direction : int, optional
        expected monotonicity (+1 non-decreasing, -1 non-increasing); inferred if omitted
    slack : float
        allowed backwards step, relative to max(1, |value|)

    Returns
    -------
    :class:`LimitEstimate`
    '''
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 3:
        raise ValueError(f'improper_limit needs at least 3 schedule points, got {v.size}')
    if not np.all(np.isfinite(v)):
        raise ValueError('improper_limit got non-finite values')
    steps = np.diff(v)
    if direction is None:
        total = v[-1] - v[0]
        direction = int(np.sign(total)) if total != 0 else 0
    allowed = slack * np.maximum(1.0, np.abs(v[1:]))
    if direction == 0:
        monotone = bool(np.all(np.abs(steps) <= allowed))
    else:
        monotone = bool(np.all(direction * steps >= -allowed))

    d1, d2 = steps[-2], steps[-1]
    last = float(v[-1])
    ratio = float(d2 / d1) if d1 != 0 else float('nan')
    if d1 != 0 and 0 < ratio < 1:
        limit = last + d2 * ratio / (1 - ratio)
    else:
        limit = last
    error = max(abs(limit - last), abs(float(d2)))
    diverges = bool(abs(last) > DIVERGENCE_VALUE and np.isfinite(ratio) and ratio >= DIVERGENCE_RATIO)
    return LimitEstimate(limit=float(limit), error=float(error), last=last, tail=float(d2),
                         ratio=ratio, monotone=monotone, direction=int(direction), diverges=diverges)


@dataclass
class MonotoneSeries:
    '''Quantity values along a schedule of r (or t) values

    Attributes:
        parameter : 'r' or 't'
        schedule  : schedule points, in the order the limit is taken
        values    : quantity values
        errors    : quadrature error estimates
        direction : expected monotonicity along the schedule (+1 or -1)
    '''
    parameter: str
    schedule: np.ndarray
    values: np.ndarray
    errors: np.ndarray = None
    direction: int = 1
    converged: np.ndarray = field(default=None)

    def __post_init__(self):
        self.schedule = np.asarray(self.schedule, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.errors is None:
            self.errors = np.zeros_like(self.values)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.converged is None:
            self.converged = np.ones(self.values.shape, dtype=bool)
        if self.schedule.shape != self.values.shape:
            raise ValueError('schedule and values differ in length')

    def __len__(self):
        return len(self.values)

    def is_monotone(self, slack=1e-6):
        steps = self.direction * np.diff(self.values)
        return bool(np.all(steps >= -slack * np.maximum(1.0, np.abs(self.values[1:]))))

    def limit(self, slack=1e-6):
        '''Extrapolated limit, with the largest quadrature error folded into the error bar'''
        estimate = improper_limit(self.values, direction=self.direction, slack=slack)
        estimate.error += float(np.max(self.errors[-2:]))
        return estimate

    def to_frame(self):
        return pd.DataFrame({self.parameter: self.schedule, 'value': self.values,
                             'error': self.errors, 'converged': self.converged})


def integrate_log_time(fn, a, b, t0, cfg=None, size=None):
    '''Integral of ``fn(t)`` over [a, b], b <= t0, in the variable sigma = log(t0 - t)

    The substitution resolves integrands concentrating near the kernel time t0. For b = t0
    the range is cut at t0 - t = (t0 - a) * window_floor.

    Parameters
    ----------
    fn : callable
        slice functional, maps a time t to a float (or an array of length ``size``)
    a, b : float
        time interval, a < b <= t0
    t0 : float
        kernel time
    cfg : :class:`QuadConfig`
    size : int, optional
        number of components of a vector-valued ``fn``
    '''
    cfg = cfg or QuadConfig()
    if not a < b:
        raise ValueError(f'time interval needs a < b, got [{a}, {b}]')
    if b > t0:
        raise ValueError(f'time interval [{a}, {b}] reaches past the kernel time t0 = {t0}')
    tail = () if size is None else (int(size),)
    hi = float(np.log(t0 - a))
    lo = float(np.log(t0 - b)) if t0 - b > 0 else hi + float(np.log(cfg.window_floor))

    def slice_value(sigma):
        return np.asarray(fn(t0 - np.exp(sigma)), dtype=np.float64).reshape(tail)

    def f(sigmas):
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                values = list(pool.map(slice_value, sigmas))
        else:
            values = [slice_value(s) for s in sigmas]
        return np.array(values) * np.exp(sigmas).reshape((-1,) + (1,) * len(tail))

    return adaptive_gauss_kronrod(f, [(lo, hi)], rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                                  max_depth=cfg.max_depth, limit=cfg.limit,
                                  initial_cells=cfg.initial_cells)
