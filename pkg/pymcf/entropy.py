'''
F-functional and entropy of time slices.

F_{x0,t0}(M_t) = (4 pi t0)^(-n/2) int_{M_t} exp(-|x - x0|^2 / (4 t0)) dmu_t, t0 > 0, is the
Huisken integral of the slice for the kernel centred at (x0, t + t0). The entropy
lambda(M_t) = sup F is found by multi-start Nelder-Mead in the scaled coordinates
(x0 / L, log t0), L^2 = max(|t|, 1).
'''

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import threading

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from pymcf.quad import QuadConfig, QuadratureError, gaussian_restriction, improper_limit, integrate_slice
from pymcf.kernel import log_phi
from pymcf.quantities import huisken_integral


# t0 is kept within L^2 * SCALE_RANGE
SCALE_RANGE = (1e-8, 1e8)


@dataclass
class EntropyResult:
    '''Entropy estimate of one time slice

    Attributes:
        t         : slice time
        value     : lambda estimate, the largest F evaluated
        x0, t0    : argmax of F
        converged : True if at least one optimiser start converged
        trace     : one row per start (start point, best F, iterations, converged, failed F
                    evaluations, failed)
        evaluations : number of F evaluations
    '''
    t: float
    value: float
    x0: np.ndarray
    t0: float
    converged: bool
    trace: pd.DataFrame = field(default_factory=pd.DataFrame)
    evaluations: int = 0

    def to_row(self):
        row = dict(t=self.t, **{'lambda': self.value})
        for i, c in enumerate(self.x0):
            row[f'x0_{i}'] = c
        row.update(t0=self.t0, converged=self.converged)
        return row


def f_functional(flow, t, x0, t0, cfg=None):
    '''F_{x0,t0}(M_t), evaluated as the Huisken integral with centre (x0, t + t0)

    Raises:
        ValueError: t0 <= 0
    '''
    if not t0 > 0:
        raise ValueError(f'f_functional needs t0 > 0, got t0 = {t0}')
    return huisken_integral(flow, t, (x0, t + t0), cfg).value


def gaussian_centroid(flow, t, scale, cfg=None):
    '''Centroid of M_t under the Gaussian weight exp(-|x|^2/(4 scale)); the origin if that mass vanishes'''
    cfg = cfg or QuadConfig()
    tau = -scale
    center = (np.zeros(flow.N), t + scale)

    def integrand(geom):
        w = np.exp(log_phi(geom.x, tau, flow.n))
        return np.concatenate([w[:, None], w[:, None] * geom.x], axis=-1)

    restriction = gaussian_restriction(flow, t, center, cfg)
    if restriction.empty:
        return np.zeros(flow.N)
    if flow.rotational and not restriction.angular:
        # axis-centred integrands are evaluated at theta = 0 only: keep the axial part
        def integrand(geom, base=integrand):  # noqa: F811
            values = base(geom)
            values[:, 1:flow.N] = 0.0
            return values
    result = integrate_slice(flow, t, integrand, restriction, cfg)
    mass = result.value[0]
    if not mass > 0:
        return np.zeros(flow.N)
    return np.asarray(result.value[1:]) / mass


class _Objective():
    '''-F in scaled coordinates (x0 / L, log t0), counting evaluations and failures'''

    def __init__(self, flow, t, cfg, axis_only):
        self.flow = flow
        self.t = t
        self.cfg = cfg
        self.axis_only = axis_only
        self.L = np.sqrt(max(abs(t), 1.0))
        self.log_bounds = (np.log(self.L**2 * SCALE_RANGE[0]), np.log(self.L**2 * SCALE_RANGE[1]))
        self.evaluations = 0
        self.failures = 0
        self._lock = threading.Lock()

    def encode(self, x0, t0):
        if self.axis_only:
            coords = [(x0 - self.flow.axis_origin)[-1] / self.L]
        else:
            coords = list(np.asarray(x0) / self.L)
        return np.array(coords + [np.log(t0)])

    def decode(self, p):
        if self.axis_only:
            x0 = self.flow.axis_origin.copy()
            x0[-1] += p[0] * self.L
        else:
            x0 = np.asarray(p[:-1]) * self.L
        return x0, float(np.exp(p[-1]))

    def fork(self):
        '''Same objective with its own evaluation counters'''
        return _Objective(self.flow, self.t, self.cfg, self.axis_only)

    def value(self, x0, t0):
        '''F at (x0, t0), or None when its Gaussian integral failed'''
        try:
            F = f_functional(self.flow, self.t, x0, t0, self.cfg)
        except QuadratureError:
            F = None
        with self._lock:
            self.evaluations += 1
            if F is None:
                self.failures += 1
        return F

    def __call__(self, p):
        lo, hi = self.log_bounds
        if p[-1] < lo or p[-1] > hi:
            return 1.0 + min(abs(p[-1] - lo), abs(p[-1] - hi))
        x0, t0 = self.decode(p)
        F = self.value(x0, t0)
        # failed evaluations never win the sup
        return np.inf if F is None else -F


def entropy_of_slice(flow, t, cfg=None, starts=5, seed=0, axis_only=None,
                     xatol=1e-6, fatol=1e-9, maxiter=400, hints=()):
    '''lambda(M_t) = sup F by multi-start Nelder-Mead

    Starts: Gaussian centroids of the slice at scales -t/4, -t, -4t, the flow's own
    ``entropy_hints`` and any extra ``hints``, ranked by F; candidates whose F failed are
    dropped and missing starts are filled with seeded perturbations of the best one. Failed
    F evaluations inside a run count against that run in the trace (``failures``) and a run
    that never evaluated F is marked ``failed``.

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    t : float
        slice time, t < 0
    cfg : :class:`pymcf.quad.QuadConfig`
    starts : int
        number of optimiser runs
    seed : int
        seed of the start perturbations
    axis_only : bool, optional
        restrict x0 to the symmetry axis (default: True for rotational flows)
    xatol, fatol : float
        Nelder-Mead simplex size and F spread at convergence
    maxiter : int
        iteration cap per start
    hints : sequence of (x0, t0)
        extra candidate centres

    Returns
    -------
    :class:`EntropyResult`
    '''
    cfg = cfg or QuadConfig()
    if not t < 0:
        raise ValueError(f'entropy_of_slice needs t < 0, got t = {t}')
    if starts < 1:
        raise ValueError('entropy_of_slice needs at least one start')
    if axis_only is None:
        axis_only = flow.rotational
    objective = _Objective(flow, t, cfg, axis_only)

    centres = []
    for scale in (-t / 4, -t, -4 * t):
        x0 = gaussian_centroid(flow, t, scale, cfg)
        centres.append((x0, scale))
    centres.extend(flow.entropy_hints(t))
    centres.extend(hints)

    candidates = []
    for x0, t0 in centres:
        p = objective.encode(np.asarray(x0, dtype=np.float64), float(t0))
        candidates.append((objective(p), len(candidates), p))
    candidates = [c for c in candidates if np.isfinite(c[0])]
    if not candidates:
        raise QuadratureError(f'entropy_of_slice({flow.name}, t={t:g}): F failed at every start')
    candidates.sort(key=lambda c: (c[0], c[1]))
    chosen = [c[2] for c in candidates[:starts]]

    rng = np.random.default_rng(seed)
    while len(chosen) < starts:
        chosen.append(chosen[0] + rng.normal(0.0, 0.5, size=chosen[0].shape))

    def run(p):
        own = objective.fork()
        simplex = np.vstack([p] + [p + 0.25 * e for e in np.eye(len(p))])
        res = minimize(own, p, method='Nelder-Mead',
                       options=dict(xatol=xatol, fatol=fatol, maxiter=maxiter,
                                    initial_simplex=simplex))
        return res, own

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, chosen))
    else:
        results = [run(p) for p in chosen]

    rows = []
    for i, (p, (res, own)) in enumerate(zip(chosen, results)):
        x0, t0 = objective.decode(p)
        failed = not np.isfinite(res.fun)
        rows.append(dict(start=i, start_x0=' '.join(f'{c:.6g}' for c in x0), start_t0=t0,
                         best=np.nan if failed else -float(res.fun), iterations=int(res.nit),
                         converged=bool(res.success) and not failed, failures=own.failures,
                         failed=failed))
        if own.failures:
            print(f'WARNING. entropy_of_slice({flow.name}, t={t:g}): start {i} had '
                  f'{own.failures} failed F evaluations')
    trace = pd.DataFrame(rows)
    converged = bool(trace['converged'].any())
    if not converged:
        print(f'WARNING. entropy_of_slice({flow.name}, t={t:g}): no optimiser start converged')

    # merge candidates and optimiser results by (-F, index)
    merged = candidates + [(float(res.fun), len(candidates) + i, res.x)
                           for i, (res, _) in enumerate(results) if np.isfinite(res.fun)]
    best_fun, _, best_p = min(merged, key=lambda c: (c[0], c[1]))
    x0, t0 = objective.decode(best_p)
    evaluations = objective.evaluations + sum(own.evaluations for _, own in results)
    return EntropyResult(t=float(t), value=float(-best_fun), x0=x0, t0=float(t0), converged=converged,
                         trace=trace, evaluations=evaluations)


@dataclass
class EntropySchedule:
    '''Entropy along a decreasing schedule of times'''
    results: list
    monotone: bool
    sup: object = None

    def values(self):
        return np.array([r.value for r in self.results])

    def to_frame(self):
        return pd.DataFrame([r.to_row() for r in self.results])

    def to_dict(self):
        sup = None if self.sup is None else asdict(self.sup)
        return dict(monotone=self.monotone, sup=sup, series=self.to_frame().to_dict(orient='list'))


def entropy_schedule(flow, times, cfg=None, slack=1e-4, **optimizer):
    '''lambda(M_t) along a decreasing schedule of times

    lambda is non-increasing along the flow, so the values must not decrease as t decreases
    (up to ``slack``). The argmax of each slice is handed to the next one as an extra start.

    Returns
    -------
    :class:`EntropySchedule` with the extrapolated sup (a :class:`pymcf.quad.LimitEstimate`
    when the schedule has at least 3 points)
    '''
    times = np.asarray(times, dtype=np.float64)
    if times.size < 1 or np.any(times >= 0):
        raise ValueError('entropy_schedule needs negative times')
    if np.any(np.diff(times) >= 0):
        raise ValueError('entropy_schedule needs a decreasing schedule of times')
    extra = list(optimizer.pop('hints', ()))
    results = []
    for t in times:
        hints = list(extra)
        if results:
            hints.append((results[-1].x0, results[-1].t0))
        results.append(entropy_of_slice(flow, float(t), cfg, hints=hints, **optimizer))
    values = np.array([r.value for r in results])
    steps = np.diff(values)
    monotone = bool(np.all(steps >= -slack))
    sup = improper_limit(values, direction=1, slack=slack) if len(values) >= 3 else None
    return EntropySchedule(results=results, monotone=monotone, sup=sup)


class EntropySeries():
    '''Pipeline step: entropy along a schedule of times

    Pipeline input data:
    --------------------
    :class:`pymcf.pipeline.Data` containing ``flow`` and ``cfg``

    Returns:
    --------
    :class:`pymcf.pipeline.Data` with ``series['entropy']`` and ``results['entropy']``

    Example config:

    .. code-block:: toml

        [steps.entropy]
        pipeline_class = 'pymcf.entropy.EntropySeries'
        times = [-0.5]
        starts = 5
    '''

    def __init__(self, times=(-1.0,), starts=5, seed=None):
        self.times = [float(t) for t in times]
        self.starts = int(starts)
        self.seed = seed
        if not all(t < 0 for t in self.times) or self.starts < 1:
            raise ValueError('entropy times must be negative and starts at least 1')

    def __call__(self, data):
        seed = data.get('seed', 0) if self.seed is None else self.seed
        schedule = entropy_schedule(data['flow'], sorted(self.times, reverse=True), data['cfg'],
                                    starts=self.starts, seed=seed)
        data['series']['entropy'] = schedule.to_frame()
        data['results']['entropy'] = schedule
        return data
