'''
Huisken's Gaussian integral, Ecker's heat-ball integral and the deficit integrals that drive
both monotonicity formulas.

All quantities take an explicit space-time centre (x0, t0), default the origin. With
tau = t - t0 and relative position x - x0:

    huisken     int_{M_t} Phi(x - x0, tau) dmu_t
    ecker       iint_{E_r} |x^T|^2 / (4 tau^2) + |H|^2 psi_r
    deficit     |H - x^perp / (2 tau)|^2, integrated with or without the weight Phi
'''

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from pymcf.kernel import HeatBall, log_phi, positive_part
from pymcf.quad import (QuadConfig, fit_heatball, gaussian_restriction, improper_limit,
                        integrate_heatball, integrate_log_time, integrate_slice)


QUANTITY_KINDS = ('huisken', 'ecker', 'ecker_ratio', 'deficit_phi', 'deficit_plain',
                  'deficit_rate', 'density', 'residual')


@dataclass
class QuantityReport:
    '''Value of one integral quantity

    Attributes:
        kind           : one of :data:`QUANTITY_KINDS`
        parameter      : t for slice quantities, r for heat-ball quantities
        center         : spatial centre x0
        center_t       : time of the centre t0
        value          : the quantity
        error_estimate : quadrature (or extrapolation) error
        converged      : False if the quadrature or extrapolation was flagged
        details        : extra numbers kept for reports
    '''
    kind: str
    parameter: float
    center: np.ndarray
    center_t: float
    value: float
    error_estimate: float
    converged: bool = True
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in QUANTITY_KINDS:
            raise ValueError(f'unknown quantity kind {self.kind!r}')
        self.center = np.asarray(self.center, dtype=np.float64)
        self.error_estimate = abs(float(self.error_estimate))

    def to_row(self):
        return dict(kind=self.kind, parameter=self.parameter,
                    center_x=' '.join(f'{c:.17g}' for c in self.center),
                    center_t=self.center_t, value=self.value, error=self.error_estimate)

    def to_dict(self):
        return dict(self.to_row(), converged=self.converged, details=self.details)


def reports_to_frame(reports):
    '''CSV-ready table: kind,parameter,center_x,center_t,value,error'''
    return pd.DataFrame([r.to_row() for r in reports],
                        columns=['kind', 'parameter', 'center_x', 'center_t', 'value', 'error'])


def as_center(flow, center=None):
    '''Normalise ``center`` to (x0 in R^N, t0); None means the space-time origin'''
    if center is None:
        return np.zeros(flow.N), 0.0
    x0, t0 = center
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    if x0.shape != (flow.N,):
        raise ValueError(f'centre must lie in R^{flow.N}, got {x0.tolist()}')
    return x0, float(t0)


def deficit_density(geom, x0, tau):
    '''|H - x^perp/(2 tau)|^2 at the points of ``geom``'''
    rel = geom.relative(x0)
    d = geom.H - geom.normal_part(rel) / (2 * tau)
    return np.sum(d * d, axis=-1)


def ecker_density(geom, x0, tau, r, n):
    '''|x^T|^2/(4 tau^2) + |H|^2 psi_r at the points of ``geom``'''
    rel = geom.relative(x0)
    xt = geom.tangential_part(rel)
    psi = positive_part(log_phi(rel, tau, n) + n * np.log(r))
    return np.sum(xt * xt, axis=-1) / (4 * tau**2) + np.sum(geom.H**2, axis=-1) * psi


def _gaussian(geom, x0, tau, n):
    return np.exp(log_phi(geom.relative(x0), tau, n))


def _report(kind, parameter, center, result, cfg, label, **details):
    result = result.checked(cfg, label)
    return QuantityReport(kind=kind, parameter=float(parameter), center=center[0],
                          center_t=center[1], value=float(result.value),
                          error_estimate=float(result.error_estimate),
                          converged=result.converged, details=details)


def huisken_integral(flow, t, center=None, cfg=None):
    '''Gaussian-weighted area int_{M_t} Phi_{x0,t0} dmu_t

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    t : float
        slice time, t < t0
    center : tuple, optional
        (x0, t0), default the space-time origin
    cfg : :class:`pymcf.quad.QuadConfig`

    Returns
    -------
    :class:`QuantityReport`

    Raises
    ------
    ValueError
        t >= t0, or t outside the flow's time domain
    pymcf.quad.QuadratureError
        the quadrature failed
    '''
    cfg = cfg or QuadConfig()
    x0, t0 = center = as_center(flow, center)
    if not t < t0:
        raise ValueError(f'huisken_integral needs t < t0 (t = {t}, t0 = {t0})')
    tau = t - t0
    restriction = gaussian_restriction(flow, t, center, cfg)
    result = integrate_slice(flow, t, lambda geom: _gaussian(geom, x0, tau, flow.n), restriction, cfg)
    return _report('huisken', t, center, result, cfg, f'huisken_integral({flow.name}, t={t:g})')


def huisken_rate(flow, t, center=None, cfg=None):
    '''d/dt of the Huisken integral: -int_{M_t} |H - x^perp/(2 tau)|^2 Phi dmu_t'''
    cfg = cfg or QuadConfig()
    x0, t0 = center = as_center(flow, center)
    if not t < t0:
        raise ValueError(f'huisken_rate needs t < t0 (t = {t}, t0 = {t0})')
    tau = t - t0
    restriction = gaussian_restriction(flow, t, center, cfg)

    def integrand(geom):
        return deficit_density(geom, x0, tau) * _gaussian(geom, x0, tau, flow.n)

    result = integrate_slice(flow, t, integrand, restriction, cfg).scaled(-1.0)
    return _report('deficit_rate', t, center, result, cfg, f'huisken_rate({flow.name}, t={t:g})')


def _heatball(flow, hb):
    if isinstance(hb, HeatBall):
        return fit_heatball(flow, hb)
    return HeatBall(r=float(hb), n=flow.n, x0=np.zeros(flow.N))


def ecker_integral(flow, hb, cfg=None):
    '''Ecker's local integral over the heat-ball, iint |x^T|^2/(4 tau^2) + |H|^2 psi_r

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    hb : :class:`pymcf.kernel.HeatBall` or float
        heat-ball (a bare radius means the ball centred at the space-time origin)
    cfg : :class:`pymcf.quad.QuadConfig`

    Returns
    -------
    :class:`QuantityReport` with parameter r
    '''
    cfg = cfg or QuadConfig()
    hb = _heatball(flow, hb)

    def integrand(geom, tau):
        return ecker_density(geom, hb.x0, tau, hb.r, hb.n)

    result = integrate_heatball(flow, hb, integrand, cfg)
    return _report('ecker', hb.r, (hb.x0, hb.t0), result, cfg,
                   f'ecker_integral({flow.name}, r={hb.r:g})')


def ecker_ratio(flow, hb, cfg=None):
    '''Ecker's integral normalised by r^n, the quantity that is monotone in r'''
    report = ecker_integral(flow, hb, cfg)
    scale = report.parameter**flow.n
    report.kind = 'ecker_ratio'
    report.value /= scale
    report.error_estimate /= scale
    return report


def deficit_phi(flow, a, b, center=None, cfg=None):
    '''Integrated Huisken deficit iint_{[a,b]} |H - x^perp/(2 tau)|^2 Phi dmu_t dt

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    a, b : float
        time interval with a < b <= t0
    center : tuple, optional
        (x0, t0)
    cfg : :class:`pymcf.quad.QuadConfig`

    Returns
    -------
    :class:`QuantityReport` with parameter a and ``details['b']``
    '''
    cfg = cfg or QuadConfig()
    x0, t0 = center = as_center(flow, center)

    def slice_deficit(t):
        return -huisken_rate(flow, t, center, cfg).value

    result = integrate_log_time(slice_deficit, a, b, t0, cfg)
    return _report('deficit_phi', a, center, result, cfg,
                   f'deficit_phi({flow.name}, [{a:g}, {b:g}])', b=float(b))


def deficit_heatball(flow, hb, weighted=False, cfg=None):
    '''Deficit over the heat-ball, weighted by Phi or unweighted

    Returns
    -------
    :class:`QuantityReport` of kind ``deficit_phi`` (weighted) or ``deficit_plain``
    '''
    cfg = cfg or QuadConfig()
    hb = _heatball(flow, hb)

    def integrand(geom, tau):
        d = deficit_density(geom, hb.x0, tau)
        if weighted:
            d = d * _gaussian(geom, hb.x0, tau, hb.n)
        return d

    result = integrate_heatball(flow, hb, integrand, cfg)
    kind = 'deficit_phi' if weighted else 'deficit_plain'
    return _report(kind, hb.r, (hb.x0, hb.t0), result, cfg,
                   f'deficit_heatball({flow.name}, r={hb.r:g}, weighted={weighted})')


# huisken_integral is evaluated at t0 - 10^-k for these k
DENSITY_EXPONENTS = (2, 3, 4, 5, 6)


def gaussian_density(flow, center=None, cfg=None, exponents=DENSITY_EXPONENTS):
    '''Gaussian density Theta(x0, t0): limit of the Huisken integral as t increases to t0

    The Huisken integral is evaluated at t0 - 10^-k and the sequence is extrapolated with
    :func:`pymcf.quad.improper_limit`. A non-monotone sequence is flagged (converged=False).
    '''
    cfg = cfg or QuadConfig()
    x0, t0 = center = as_center(flow, center)
    times = [t0 - 10.0**-k for k in exponents]
    reports = [huisken_integral(flow, t, center, cfg) for t in times]
    values = np.array([r.value for r in reports])
    estimate = improper_limit(values, slack=1e-6)
    error = estimate.error + max(r.error_estimate for r in reports[-2:])
    converged = estimate.monotone and all(r.converged for r in reports)
    if not estimate.monotone:
        print(f'WARNING. gaussian_density({flow.name}): Huisken values not monotone: {values}')
    return QuantityReport(kind='density', parameter=t0, center=x0, center_t=t0,
                          value=estimate.limit, error_estimate=error, converged=converged,
                          details=dict(times=times, values=values.tolist()))


def residual_er35(flow, r, cfg=None, center=None, density=None):
    '''Residual of the finite-r identity

        A_r / r^n - Theta(x0, t0) = iint_{E_r} D Phi - r^-n iint_{E_r} D,

    D the deficit density. The three heat-ball integrals share one quadrature (same sampling);
    the density Theta comes from :func:`gaussian_density` unless given.

    Returns
    -------
    :class:`QuantityReport` of kind ``residual``: value |LHS - RHS|, details with all terms
    '''
    cfg = cfg or QuadConfig()
    x0, t0 = center = as_center(flow, center)
    hb = HeatBall(r=r, n=flow.n, x0=x0, t0=t0)
    if density is None:
        density = gaussian_density(flow, center, cfg)

    def integrand(geom, tau):
        d = deficit_density(geom, x0, tau)
        return np.stack([ecker_density(geom, x0, tau, r, flow.n),
                         d * _gaussian(geom, x0, tau, flow.n), d], axis=-1)

    result = integrate_heatball(flow, hb, integrand, cfg, size=3)
    result = result.checked(cfg, f'residual_er35({flow.name}, r={r:g})')
    ecker, weighted, plain = (float(v) for v in result.value)
    err = np.asarray(result.error_estimate, dtype=np.float64)
    scale = r**flow.n
    lhs = ecker / scale - density.value
    rhs = weighted - plain / scale
    error = err[0] / scale + density.error_estimate + err[1] + err[2] / scale
    return QuantityReport(kind='residual', parameter=r, center=x0, center_t=t0,
                          value=abs(lhs - rhs), error_estimate=error,
                          converged=result.converged and density.converged,
                          details=dict(ecker_ratio=ecker / scale, density=density.value,
                                       deficit_phi=weighted, deficit_plain=plain, lhs=lhs, rhs=rhs))


def _step_center(flow, center_x, center_t):
    if center_x is None and center_t == 0.0:
        return None
    x0 = np.zeros(flow.N) if center_x is None else center_x
    return as_center(flow, (x0, center_t))


class HuiskenSeries():
    '''Pipeline step: Huisken integral over a list of times

    Pipeline input data:
    --------------------
    :class:`pymcf.pipeline.Data` containing ``flow`` and ``cfg``

    Returns:
    --------
    :class:`pymcf.pipeline.Data` with ``series['huisken']``

    Example config:

    .. code-block:: toml

        [steps.huisken]
        pipeline_class = 'pymcf.quantities.HuiskenSeries'
        times = [-1, -4, -16, -64, -256]
    '''

    def __init__(self, times=(-1.0,), center_x=None, center_t=0.0):
        self.times = [float(t) for t in times]
        self.center_x = center_x
        self.center_t = float(center_t)
        if not all(t < self.center_t for t in self.times):
            raise ValueError(f'times must lie before center_t = {self.center_t}: {self.times}')

    def __call__(self, data):
        flow = data['flow']
        center = _step_center(flow, self.center_x, self.center_t)
        reports = [huisken_integral(flow, t, center, data['cfg']) for t in self.times]
        data['series']['huisken'] = reports_to_frame(reports)
        return data


class EckerSeries():
    '''Pipeline step: Ecker's integral A(E_r) / r^n over a list of radii

    Example config:

    .. code-block:: toml

        [steps.ecker]
        pipeline_class = 'pymcf.quantities.EckerSeries'
        radii = [1, 2, 4, 8, 16]
    '''

    def __init__(self, radii=(1.0,), center_x=None, center_t=0.0):
        self.radii = [float(r) for r in radii]
        self.center_x = center_x
        self.center_t = float(center_t)
        if not all(r > 0 for r in self.radii):
            raise ValueError(f'radii must be positive: {self.radii}')

    def __call__(self, data):
        flow = data['flow']
        x0, t0 = _step_center(flow, self.center_x, self.center_t) or as_center(flow)
        reports = [ecker_ratio(flow, HeatBall(r=r, n=flow.n, x0=x0, t0=t0), data['cfg'])
                   for r in self.radii]
        data['series']['ecker'] = reports_to_frame(reports)
        return data


class DensityStep():
    '''Pipeline step: Gaussian density at a space-time point

    Example config:

    .. code-block:: toml

        [steps.density]
        pipeline_class = 'pymcf.quantities.DensityStep'
        center_x = [0.0, 0.0]
        center_t = 0.0
    '''

    def __init__(self, center_x=None, center_t=0.0, exponents=DENSITY_EXPONENTS):
        self.center_x = center_x
        self.center_t = float(center_t)
        self.exponents = tuple(int(k) for k in exponents)

    def __call__(self, data):
        flow = data['flow']
        center = _step_center(flow, self.center_x, self.center_t)
        report = gaussian_density(flow, center, data['cfg'], self.exponents)
        data['series']['density'] = reports_to_frame([report])
        data['results']['density'] = report
        return data
