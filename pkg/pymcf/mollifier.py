'''
Smoothing of the heat-ball boundary.

A bump eta_eps supported in [0, eps] with unit mass generates the smoothed Heaviside
zeta_eps (its antiderivative) and the smoothed ramp Z_eps (the antiderivative of zeta_eps):

    chi(x - eps) <= zeta_eps(x) <= chi(x),        [x - eps]_+ <= Z_eps(x) <= [x]_+

Replacing chi(psi_r) and psi_r by these in Ecker's integral gives the smoothed integral
A_eps(s, r), whose monotonicity in r follows from the kernel identity

    int_0^inf n / r^(n+1) zeta_eps(psi_r) dr = exp(alpha(eta_eps)) Phi,
    alpha(eta_eps) = log int e^-y eta_eps(y) dy <= 0.

The bump is eta_eps(y) = eta_1(y / eps) / eps with eta_1(z) = c exp(-1 / (z (1 - z))) on (0, 1).
'''

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator

from pymcf.kernel import HeatBall, heaviside, log_phi, positive_part, slice_radius
from pymcf.quad import (QuadConfig, adaptive_gauss_kronrod, gauss_legendre, integrate_heatball,
                        integrate_slice, improper_limit, nested_result, nested_rows)
from pymcf.flows.base import restrict_to_ball
from pymcf.quantities import deficit_density, ecker_integral


def bump(z):
    '''Unnormalised bump exp(-1 / (z (1 - z))) on (0, 1), zero elsewhere'''
    z = np.asarray(z, dtype=np.float64)
    inside = (z > 0) & (z < 1)
    zz = np.where(inside, z, 0.5)
    return np.where(inside, np.exp(-1 / (zz * (1 - zz))), 0.0)


def _cumulative(f, edges, rule):
    '''Cumulative integrals of f from edges[0] to every edge, with a Gauss-Legendre rule per cell'''
    x, w = rule
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo)[:, None] + half[:, None] * x[None, :]
    cells = half * np.sum(w[None, :] * f(nodes), axis=1)
    return np.concatenate([[0.0], np.cumsum(cells)])


class MollifierFamily():
    '''The triple (eta_eps, zeta_eps, Z_eps) for one eps, with alpha(eta_eps)

    zeta and Z are interpolated from cumulative tables on ``nodes`` cells of [0, eps]
    (monotone cubic interpolation for zeta, its exact antiderivative for Z). The exponential
    moment K_eps(y) = int_{-inf}^y e^-u zeta_eps(u) du is tabulated the same way; it integrates
    n / r^(n+1) zeta_eps(psi_r) over r in closed form.

    Instances are immutable after construction.

    Parameters
    ----------
    eps : float
        support width, eps > 0
    nodes : int
        number of table cells
    '''

    def __init__(self, eps, nodes=2048):
        if not eps > 0:
            raise ValueError(f'mollifier width must be positive, got eps = {eps}')
        self.eps = float(eps)
        self.nodes = int(nodes)
        strict = dict(rel_tol=1e-14, abs_tol=1e-300, max_depth=50, limit=2000, initial_cells=16)

        norm = adaptive_gauss_kronrod(bump, [(0.0, 1.0)], **strict)
        self._norm = norm.value

        edges = np.linspace(0.0, 1.0, self.nodes + 1)
        rule = gauss_legendre(8)
        zeta_table = _cumulative(self.eta_unit, edges, rule)
        zeta_table /= zeta_table[-1]
        self._zeta = PchipInterpolator(edges, zeta_table)
        self._ramp = self._zeta.antiderivative()
        self.ramp_offset = self.eps * (1.0 - float(self._ramp(1.0)))
        '''Z_eps(x) = x - ramp_offset for x >= eps'''

        eps_ = self.eps
        self._moment = PchipInterpolator(
            edges, _cumulative(lambda z: eps_ * np.exp(-eps_ * z) * self._zeta(z), edges, rule))
        self._moment_top = float(self._moment(1.0))

        moment = adaptive_gauss_kronrod(lambda z: np.exp(-eps_ * z) * self.eta_unit(z),
                                        [(0.0, 1.0)], **strict)
        self.alpha = float(np.log(moment.value))
        '''alpha(eta_eps) = log int e^-y eta_eps(y) dy'''

    def eta_unit(self, z):
        return bump(z) / self._norm

    def eta(self, y):
        '''eta_eps(y) = eta_1(y / eps) / eps'''
        return self.eta_unit(np.asarray(y, dtype=np.float64) / self.eps) / self.eps

    def zeta(self, x):
        '''Smoothed Heaviside zeta_eps(x) = int_{-inf}^x eta_eps'''
        x = np.asarray(x, dtype=np.float64)
        z = np.clip(x / self.eps, 0.0, 1.0)
        out = np.clip(self._zeta(z), 0.0, 1.0)
        return np.where(x <= 0, 0.0, np.where(x >= self.eps, 1.0, out))

    def Z(self, x):
        '''Smoothed ramp Z_eps(x) = int_{-inf}^x zeta_eps'''
        x = np.asarray(x, dtype=np.float64)
        z = np.clip(x / self.eps, 0.0, 1.0)
        inner = np.clip(self.eps * self._ramp(z), 0.0, np.maximum(x, 0.0))
        return np.where(x <= 0, 0.0, np.where(x >= self.eps, x - self.ramp_offset, inner))

    def K(self, y):
        '''Exponential moment K_eps(y) = int_{-inf}^y e^-u zeta_eps(u) du'''
        y = np.asarray(y, dtype=np.float64)
        z = np.clip(y / self.eps, 0.0, 1.0)
        inner = self._moment(z)
        with np.errstate(over='ignore'):
            beyond = self._moment_top + np.exp(-self.eps) - np.exp(-np.maximum(y, self.eps))
        return np.where(y <= 0, 0.0, np.where(y >= self.eps, beyond, inner))

    def mass(self):
        '''int eta_eps, by adaptive quadrature'''
        return adaptive_gauss_kronrod(self.eta, [(0.0, self.eps)], rel_tol=1e-14, abs_tol=1e-300,
                                      initial_cells=16).value

    def __repr__(self):
        return f'MollifierFamily(eps={self.eps:g}, alpha={self.alpha:.6g})'


def make_mollifier(eps, nodes=2048):
    '''Build the :class:`MollifierFamily` of width ``eps``'''
    return MollifierFamily(eps, nodes=nodes)


def smoothed_ecker(flow, r, s=None, fam=None, cfg=None):
    '''Smoothed Ecker integral A_eps(s, r) = iint_{t<s} |x^T|^2/(4t^2) zeta(psi_r) + |H|^2 Z(psi_r)

    The integrand vanishes outside the heat-ball E_r, so the integral runs over E_r truncated
    at time s. ``s=None`` integrates the whole window, which is the limit A_eps(r) as s -> 0.

    Parameters
    ----------
    flow : :class:`pymcf.flows.base.AncientFlow`
    r : float
        heat-ball radius
    s : float, optional
        truncation time, s < 0
    fam : :class:`MollifierFamily`
    cfg : :class:`pymcf.quad.QuadConfig`

    Returns
    -------
    :class:`pymcf.quad.QuadResult`
    '''
    cfg = cfg or QuadConfig()
    if fam is None:
        raise ValueError('smoothed_ecker needs a MollifierFamily')
    if s is not None and not s < 0:
        raise ValueError(f'truncation time must be negative, got s = {s}')
    hb = HeatBall(r=r, n=flow.n, x0=np.zeros(flow.N))
    n = flow.n

    def integrand(geom, tau):
        xt = geom.tangential_part(geom.x)
        psi = log_phi(geom.x, tau, n) + n * np.log(r)
        return (np.sum(xt * xt, axis=-1) / (4 * tau**2) * fam.zeta(psi)
                + np.sum(geom.H**2, axis=-1) * fam.Z(psi))

    result = integrate_heatball(flow, hb, integrand, cfg, until=s)
    return result.checked(cfg, f'smoothed_ecker({flow.name}, r={r:g}, eps={fam.eps:g})')


def smoothed_ecker_limit(flow, r, fam, cfg=None, exponents=range(1, 9)):
    '''A_eps(r) by extrapolating A_eps(s, r) along s = -2^-k

    Returns
    -------
    :class:`pymcf.quad.LimitEstimate` and the series as a DataFrame
    '''
    cfg = cfg or QuadConfig()
    times = np.array([-2.0**-k for k in exponents])
    values = np.array([smoothed_ecker(flow, r, s, fam, cfg).value for s in times])
    return improper_limit(values, direction=1), pd.DataFrame({'s': times, 'value': values})


def smoothed_sandwich(flow, r, fam, cfg=None):
    '''The three terms e^-eps A(E_{r'}) / r^n <= A_eps(r) / r^n <= A(E_r) / r^n, r' = e^(-eps/n) r

    Returns
    -------
    dict with 'lower', 'middle', 'upper', 'holds' and the combined error bar 'error'
    '''
    cfg = cfg or QuadConfig()
    n = flow.n
    scale = r**n
    inner = ecker_integral(flow, r * np.exp(-fam.eps / n), cfg)
    middle = smoothed_ecker(flow, r, None, fam, cfg)
    outer = ecker_integral(flow, r, cfg)
    lower = np.exp(-fam.eps) * inner.value / scale
    error = (inner.error_estimate + middle.error_estimate + outer.error_estimate) / scale
    mid = middle.value / scale
    upper = outer.value / scale
    return dict(lower=lower, middle=mid, upper=upper, error=error,
                holds=bool(lower <= mid + error and mid <= upper + error))


def pflem_identity_residual(fam, samples, n, cfg=None):
    '''Max relative residual of int_0^inf n / r^(n+1) zeta_eps(psi_r) dr = e^alpha Phi

    The left side is integrated directly in r: psi_r > 0 only for r > r0 = exp(-psi_1 / n)
    and zeta_eps(psi_r) = 1 beyond r_eps = r0 exp(eps / n), whose tail integrates to r_eps^-n.

    Parameters
    ----------
    fam : :class:`MollifierFamily`
    samples : list of (x, t)
        sample points with t < 0
    n : int
        intrinsic dimension
    cfg : :class:`pymcf.quad.QuadConfig`

    Returns
    -------
    float
    '''
    cfg = cfg or QuadConfig(rel_tol=1e-12, abs_tol=1e-300)
    worst = 0.0
    for x, t in samples:
        if not t < 0:
            raise ValueError(f'pflem_identity_residual needs t < 0, got t = {t}')
        psi_1 = float(log_phi(np.atleast_1d(np.asarray(x, dtype=np.float64)), t, n))
        r0 = np.exp(-psi_1 / n)
        r_eps = r0 * np.exp(fam.eps / n)

        def integrand(r):
            return n / r**(n + 1) * fam.zeta(psi_1 + n * np.log(r))

        ramp = adaptive_gauss_kronrod(integrand, [(r0, r_eps)], rel_tol=cfg.rel_tol,
                                      abs_tol=cfg.abs_tol, max_depth=cfg.max_depth,
                                      limit=cfg.limit, initial_cells=cfg.initial_cells)
        lhs = ramp.value + r_eps**-n
        rhs = np.exp(fam.alpha + psi_1)
        worst = max(worst, abs(lhs - rhs) / rhs)
    return float(worst)


def error_term(flow, s, sigma, rho, fam, cfg=None):
    '''E(s; sigma, rho) = int_sigma^rho dr int_{M_s} n / r^(n+1) Z_eps(psi_r) dmu_s

    Z_eps(psi_r) is supported in the slice of E_r at time s, so every r integrates over the
    ball of radius R_r(s); radii whose window does not reach back to s contribute nothing.
    '''
    cfg = cfg or QuadConfig()
    if not 0 < sigma < rho:
        raise ValueError(f'error_term needs 0 < sigma < rho, got sigma = {sigma}, rho = {rho}')
    if not s < 0:
        raise ValueError(f'error_term needs s < 0, got s = {s}')
    n = flow.n
    origin = np.zeros(flow.N)

    def slice_value(r):
        R = slice_radius(r, s, n, clip=True)
        if R == 0:
            return None
        restriction = restrict_to_ball(flow, s, origin, R, scan_cells=cfg.scan_cells)
        if restriction.empty:
            return None

        def integrand(geom):
            return fam.Z(log_phi(geom.x, s, n) + n * np.log(r))

        return integrate_slice(flow, s, integrand, restriction, cfg).scaled(n / r**(n + 1))

    inner_converged = []

    def f(radii):
        rows, converged = nested_rows([slice_value(r) for r in radii], ())
        inner_converged.append(converged)
        return rows

    # radii below sqrt(4 pi |s|) have windows ending after s
    r_min = np.sqrt(4 * np.pi * abs(s))
    lo = max(sigma, r_min)
    if not rho > lo:
        return 0.0
    result = adaptive_gauss_kronrod(f, [(lo, rho)], rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                                    max_depth=cfg.max_depth, limit=cfg.limit,
                                    initial_cells=cfg.initial_cells, passive=1)
    result = nested_result(result, (), all(inner_converged))
    return float(result.checked(cfg, f'error_term({flow.name}, s={s:g})').value)


def smoothed_monotonicity_check(flow, sigma, rho, fam, cfg=None):
    '''Both sides of A_eps(rho)/rho^n - A_eps(sigma)/sigma^n = iiint n/r^(n+1) D zeta_eps(psi_r)

    The r-integral on the right is done in closed form through the exponential moment:
    int_sigma^rho n/r^(n+1) zeta_eps(psi_r) dr = Phi (K_eps(psi_rho) - K_eps(psi_sigma)),
    which is supported in E_rho.
    The direct r-quadrature of the kernel identity behind this is :func:`pflem_identity_residual`.

    Returns
    -------
    dict with 'lhs', 'rhs', 'residual', 'relative' and 'error'
    '''
    cfg = cfg or QuadConfig()
    if not 0 < sigma < rho:
        raise ValueError(f'smoothed_monotonicity_check needs 0 < sigma < rho, got {sigma}, {rho}')
    n = flow.n
    big = smoothed_ecker(flow, rho, None, fam, cfg)
    small = smoothed_ecker(flow, sigma, None, fam, cfg)
    lhs = big.value / rho**n - small.value / sigma**n

    def integrand(geom, tau):
        lp = log_phi(geom.x, tau, n)
        weight = np.exp(lp) * (fam.K(lp + n * np.log(rho)) - fam.K(lp + n * np.log(sigma)))
        return deficit_density(geom, np.zeros(flow.N), tau) * weight

    hb = HeatBall(r=rho, n=n, x0=np.zeros(flow.N))
    right = integrate_heatball(flow, hb, integrand, cfg)
    right = right.checked(cfg, f'smoothed_monotonicity_check({flow.name})')
    residual = abs(lhs - right.value)
    scale = max(abs(lhs), abs(right.value))
    error = big.error_estimate / rho**n + small.error_estimate / sigma**n + right.error_estimate
    return dict(lhs=lhs, rhs=float(right.value), residual=residual,
                relative=residual / scale if scale > 0 else 0.0, error=error)


# (x, t) grid of the kernel-identity check
PFLEM_GRID = tuple((x, t) for x in (0.0, 0.25, 1.0) for t in (-1 / (4 * np.pi), -0.5, -2.0))


def sandwich_violations(fam, samples=10000, seed=0):
    '''Number of random x in [-eps, 2 eps] breaking chi(x - eps) <= zeta(x) <= chi(x)
    or [x - eps]_+ <= Z(x) <= [x]_+'''
    rng = np.random.default_rng(seed)
    x = rng.uniform(-fam.eps, 2 * fam.eps, size=samples)
    zeta, Z = fam.zeta(x), fam.Z(x)
    bad = ((heaviside(x - fam.eps) > zeta) | (zeta > heaviside(x))
           | (positive_part(x - fam.eps) > Z) | (Z > positive_part(x)))
    return int(np.count_nonzero(bad))


def mollifier_suite(eps_list=(0.5, 0.1, 0.02), n=1, samples=10000, seed=0, cfg=None):
    '''Table of the flow-independent mollifier checks, one row per eps

    Columns: eps, alpha, mass, pflem_residual, sandwich_violations.
    '''
    rows = []
    for eps in eps_list:
        fam = make_mollifier(eps)
        rows.append(dict(eps=fam.eps, alpha=fam.alpha, mass=fam.mass(),
                         pflem_residual=pflem_identity_residual(fam, PFLEM_GRID, n, cfg),
                         sandwich_violations=sandwich_violations(fam, samples, seed)))
    return pd.DataFrame(rows, columns=['eps', 'alpha', 'mass', 'pflem_residual', 'sandwich_violations'])


def monotonicity_table(flow, eps_list, sigma, rho, cfg=None, tolerance=1e-2, noise_floor=1e-5):
    ''':func:`smoothed_monotonicity_check` of the flow for every eps, one row per eps

    A row holds when its relative residual is within ``tolerance`` or its residual is within
    ``noise_floor`` plus the combined error bar (flows without deficit have both sides near 0).

    Columns: eps, sigma, rho, lhs, rhs, residual, relative, error, holds.
    '''
    rows = []
    for eps in eps_list:
        check = smoothed_monotonicity_check(flow, sigma, rho, make_mollifier(eps), cfg)
        holds = check['relative'] <= tolerance or check['residual'] <= noise_floor + check['error']
        rows.append(dict(eps=float(eps), sigma=float(sigma), rho=float(rho), **check,
                         holds=bool(holds)))
    return pd.DataFrame(rows, columns=['eps', 'sigma', 'rho', 'lhs', 'rhs', 'residual', 'relative',
                                       'error', 'holds'])


class MollifierSuite():
    '''Pipeline step: mollifier checks for a list of eps, the smoothed monotonicity identity of the
    flow between the radii sigma < rho, and optionally the smoothed-Ecker sandwich at ``r``

    Pipeline input data:
    --------------------
    :class:`pymcf.pipeline.Data` containing ``flow`` and ``cfg``

    Returns:
    --------
    :class:`pymcf.pipeline.Data` with ``series['mollifier']``, ``series['monotonicity']``
    (see :func:`monotonicity_table`; skipped when ``radii`` is empty) and, when ``r`` is set,
    ``series['sandwich']``

    Example config:

    .. code-block:: toml

        [steps.mollifier]
        pipeline_class = 'pymcf.mollifier.MollifierSuite'
        eps = [0.5, 0.1, 0.02]
        radii = [1.0, 4.0]
        r = 2.0
    '''

    def __init__(self, eps=(0.5, 0.1, 0.02), samples=10000, r=None, radii=(1.0, 4.0),
                 tolerance=1e-2, noise_floor=1e-5):
        self.eps = [float(e) for e in eps]
        if not all(e > 0 for e in self.eps):
            raise ValueError(f'mollifier widths must be positive: {self.eps}')
        self.samples = int(samples)
        self.r = r
        self.radii = [float(v) for v in radii or ()]
        if self.radii and not (len(self.radii) == 2 and 0 < self.radii[0] < self.radii[1]):
            raise ValueError(f'radii must be a pair 0 < sigma < rho, got {self.radii}')
        self.tolerance = float(tolerance)
        self.noise_floor = float(noise_floor)

    def __call__(self, data):
        flow = data['flow']
        seed = data.get('seed', 0)
        suite = mollifier_suite(self.eps, n=flow.n, samples=self.samples, seed=seed)
        data['series']['mollifier'] = suite
        if self.radii:
            sigma, rho = self.radii
            table = monotonicity_table(flow, self.eps, sigma, rho, data['cfg'], self.tolerance,
                                       self.noise_floor)
            data['series']['monotonicity'] = table
            if not table['holds'].all():
                print(f'WARNING. smoothed monotonicity of {flow.name} between r = {sigma:g} and '
                      f'{rho:g} off by more than {self.tolerance:g}')
        if self.r is not None:
            rows = []
            for eps in self.eps:
                terms = smoothed_sandwich(flow, float(self.r), make_mollifier(eps), data['cfg'])
                rows.append(dict(eps=eps, r=float(self.r), **terms))
            data['series']['sandwich'] = pd.DataFrame(rows)
        return data
