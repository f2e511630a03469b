'''
Space-time geometry of explicit ancient mean curvature flows.

A flow supplies closed-form position, first and second parameter derivatives on a chart.
:func:`evaluate_geometry` assembles the first and second fundamental forms from those
derivatives, giving the area density, the tangential/normal projectors and the mean
curvature vector H = g^ij (x_ij)^perp at a stack of parameter points.

Charts come in three kinds:

* ``interval``  - a curve parametrised over an interval (possibly unbounded)
* ``periodic``  - a closed curve parametrised over one period
* ``rotsym``    - a surface of revolution in R^3 about the x_3 axis, parameters (u, theta)
  where u runs along the profile curve. Slice integrals over these surfaces are
  reduced to one-dimensional integrals in u (see :mod:`pymcf.quad`).

Parameter points are always passed as arrays of shape (m, n).
'''

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


CHART_KINDS = ('interval', 'periodic', 'rotsym')


@dataclass(frozen=True)
class Chart:
    '''Parameter domain of a flow

    ``lower``/``upper`` bound the curve parameter (or the profile parameter for ``rotsym``).
    ``breakpoints`` are interior parameter values where the parametrisation switches patch;
    quadrature and bracketing never straddle them.
    '''
    kind: str
    lower: float
    upper: float
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise ValueError(f'unknown chart kind {self.kind!r}, expected one of {CHART_KINDS}')
        if not self.upper > self.lower:
            raise ValueError('chart needs upper > lower')

    @property
    def bounded(self):
        return np.isfinite(self.lower) and np.isfinite(self.upper)

    @property
    def period(self):
        return self.upper - self.lower

    def contains(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == 'periodic':
            return np.isfinite(u)
        return (u >= self.lower) & (u <= self.upper)


class AncientFlow():
    '''Base class for the catalog of explicit ancient mean curvature flows

    Subclasses implement :meth:`position`, :meth:`jacobian` and :meth:`hessian` for parameter
    stacks of shape (m, n). Optional hooks refine the generic machinery:

    * :meth:`parameter_extent` - bound on the curve/profile parameter outside which the
      flow stays out of a ball about the origin (required for unbounded charts)
    * :meth:`ball_interval` - exact parameter interval(s) of M_t inside a ball, when the
      flow has monotone-|x| structure
    * :meth:`mean_curvature_exact` - closed-form H used to cross-check the assembled one
    * :meth:`entropy_hints` - (x0, t0) starting points for the entropy optimiser

    Attributes
    ----------
    name : str
        catalog identifier
    n, N : int
        intrinsic and ambient dimension
    chart : :class:`Chart`
    t_max : float
        supremum of the time domain (0 for flows that become singular at t = 0, inf for eternal ones)
    is_self_shrinker : bool
        True if H = x^perp/(2t) about the space-time origin
    translation : array or None
        velocity v for translating solitons, M_t = M_0 + t v
    reaches_origin_at_zero : bool
        True if the flow passes through the space-time origin
    axis_origin : array
        a point on the symmetry axis (rotsym charts only, axis direction e_N)
    '''

    name = 'flow'
    n = 1
    N = 2
    t_max = 0.0
    is_self_shrinker = False
    translation = None
    reaches_origin_at_zero = False

    def __init__(self, chart):
        self.chart = chart
        self.axis_origin = np.zeros(self.N)

    @property
    def rotational(self):
        return self.chart.kind == 'rotsym'

    def position(self, u, t):
        raise NotImplementedError

    def jacobian(self, u, t):
        raise NotImplementedError

    def hessian(self, u, t):
        raise NotImplementedError

    def mean_curvature_exact(self, u, t):
        return None

    def parameter_extent(self, t, radius):
        '''Parameter bound U with |x(u, t)| >= radius whenever |u| > U (u > U for profiles)'''
        if self.chart.bounded:
            return max(abs(self.chart.lower), abs(self.chart.upper))
        raise NotImplementedError(f'{self.name} has an unbounded chart and must bound its extent')

    def ball_interval(self, t, center, R):
        return None

    def entropy_hints(self, t):
        return []

    def check_time(self, t):
        if not t < self.t_max:
            raise ValueError(f'{self.name} is only defined for t < {self.t_max}, got t = {t}')

    def describe(self):
        info = dict(name=self.name, n=self.n, N=self.N, chart=self.chart.kind,
                    is_self_shrinker=self.is_self_shrinker,
                    reaches_origin_at_zero=self.reaches_origin_at_zero)
        if self.translation is not None:
            info['translation'] = [float(v) for v in self.translation]
        return info

    def __repr__(self):
        return f'{type(self).__name__}({self.name!r}, n={self.n}, N={self.N})'


class CurveFlow(AncientFlow):
    '''Plane curves: subclasses implement :meth:`curve` returning (p, p', p'') of shape (m, 2)'''

    n = 1
    N = 2

    def curve(self, s, t):
        raise NotImplementedError

    def position(self, u, t):
        return self.curve(np.asarray(u)[:, 0], t)[0]

    def jacobian(self, u, t):
        return self.curve(np.asarray(u)[:, 0], t)[1][:, :, None]

    def hessian(self, u, t):
        return self.curve(np.asarray(u)[:, 0], t)[2][:, :, None, None]


class RotationalFlow(AncientFlow):
    '''Surfaces of revolution about the x_3 axis

    Subclasses implement :meth:`profile` returning arrays (rho, z, rho', z', rho'', z'')
    for the profile parameter u, where rho is the distance to the axis.
    '''

    n = 2
    N = 3

    def profile(self, u, t):
        raise NotImplementedError

    def _frame(self, u):
        u = np.asarray(u, dtype=np.float64)
        return u[:, 0], np.cos(u[:, 1]), np.sin(u[:, 1])

    def position(self, u, t):
        s, c, sn = self._frame(u)
        rho, z = self.profile(s, t)[:2]
        return self.axis_origin + np.stack([rho * c, rho * sn, z], axis=-1)

    def jacobian(self, u, t):
        s, c, sn = self._frame(u)
        rho, z, drho, dz = self.profile(s, t)[:4]
        zero = np.zeros_like(rho)
        x_u = np.stack([drho * c, drho * sn, dz], axis=-1)
        x_th = np.stack([-rho * sn, rho * c, zero], axis=-1)
        return np.stack([x_u, x_th], axis=-1)

    def hessian(self, u, t):
        s, c, sn = self._frame(u)
        rho, z, drho, dz, d2rho, d2z = self.profile(s, t)
        zero = np.zeros_like(rho)
        x_uu = np.stack([d2rho * c, d2rho * sn, d2z], axis=-1)
        x_ut = np.stack([-drho * sn, drho * c, zero], axis=-1)
        x_tt = np.stack([-rho * c, -rho * sn, zero], axis=-1)
        row_u = np.stack([x_uu, x_ut], axis=-1)
        row_t = np.stack([x_ut, x_tt], axis=-1)
        return np.stack([row_u, row_t], axis=-2)

    def axial_offset(self, center):
        '''Distance of ``center`` from the axis and its axial coordinate'''
        rel = np.asarray(center, dtype=np.float64) - self.axis_origin
        return float(np.hypot(rel[0], rel[1])), float(rel[2]), float(np.arctan2(rel[1], rel[0]))


@dataclass
class SliceGeometry:
    '''Geometry of M_t at a stack of m parameter points

    Attributes:
        x        : (m, N) positions
        area     : (m,) area density sqrt(det g) per unit parameter volume
        tangent  : (m, N, N) orthogonal projector onto the tangent space
        normal   : (m, N, N) orthogonal projector onto the normal space
        H        : (m, N) mean curvature vector
        t        : slice time
    '''
    x: np.ndarray
    area: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    H: np.ndarray
    t: float

    def __len__(self):
        return self.x.shape[0]

    def relative(self, x0):
        return self.x - np.asarray(x0, dtype=np.float64)

    def tangential_part(self, v):
        return np.einsum('mab,mb->ma', self.tangent, v)

    def normal_part(self, v):
        return np.einsum('mab,mb->ma', self.normal, v)


def _as_parameters(flow, u):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0:
        u = u.reshape(1, 1)
    elif u.ndim == 1:
        u = u.reshape(-1, 1) if flow.n == 1 else u.reshape(1, -1)
    if u.shape[1] != flow.n:
        raise ValueError(f'{flow.name} takes {flow.n} parameters per point, got shape {u.shape}')
    return u


def evaluate_geometry(flow, u, t, check_chart=True):
    '''Assemble :class:`SliceGeometry` of ``flow`` at parameter points ``u`` and time ``t``

    Parameters
    ----------
    flow : :class:`AncientFlow`
    u : array
        parameter points, shape (m, n) (a flat array is accepted for curves)
    t : float
        slice time, inside the flow's time domain
    check_chart : bool
        raise ValueError for parameters outside the chart

    Returns
    -------
    :class:`SliceGeometry`
    '''
    flow.check_time(t)
    u = _as_parameters(flow, u)
    if check_chart and not np.all(flow.chart.contains(u[:, 0])):
        raise ValueError(f'parameter outside the chart of {flow.name}: '
                         f'[{flow.chart.lower}, {flow.chart.upper}]')
    x = flow.position(u, t)
    J = flow.jacobian(u, t)
    g = np.einsum('mai,maj->mij', J, J)
    det = np.linalg.det(g)
    ginv = np.linalg.inv(g)
    tangent = np.einsum('mai,mij,mbj->mab', J, ginv, J)
    normal = np.eye(flow.N)[None, :, :] - tangent
    second = flow.hessian(u, t)
    trace = np.einsum('mij,maij->ma', ginv, second)
    H = np.einsum('mab,mb->ma', normal, trace)
    return SliceGeometry(x=x, area=np.sqrt(det), tangent=tangent, normal=normal, H=H, t=float(t))


@dataclass
class BallRestriction:
    '''Parameter sub-domains of M_t lying inside the Euclidean ball B_R(center)

    For ``interval``/``periodic`` charts ``intervals`` lists disjoint parameter intervals.
    For ``rotsym`` charts they are profile intervals; when ``angular`` is set the centre is
    off the symmetry axis and each profile point only meets the ball along an arc of
    angles (see :func:`angular_arc`).
    '''
    intervals: list
    center: np.ndarray
    radius: float
    t: float
    tol: float = 0.0
    angular: bool = False

    @property
    def empty(self):
        return len(self.intervals) == 0

    def total_length(self):
        return float(sum(b - a for a, b in self.intervals))


def angular_arc(flow, u, t, center, R):
    '''Arc of angles theta at which the circle of profile point u meets B_R(center)

    Returns (phi_c, half_width) arrays: the circle lies in the ball for
    |theta - phi_c| < half_width (half_width = pi for whole circles, 0 for none).
    '''
    c_perp, c_axial, phi_c = flow.axial_offset(center)
    rho, z = flow.profile(np.asarray(u, dtype=np.float64), t)[:2]
    num = rho**2 + c_perp**2 + (z - c_axial)**2 - R**2
    den = 2 * rho * c_perp
    with np.errstate(divide='ignore', invalid='ignore'):
        kappa = np.where(den > 0, num / den, np.where(num < 0, -np.inf, np.inf))
    half_width = np.arccos(np.clip(kappa, -1.0, 1.0))
    return np.full_like(half_width, phi_c), half_width


def on_axis(flow, center, rel=1e-12):
    c_perp, c_axial, _ = flow.axial_offset(center)
    return c_perp <= rel * max(1.0, abs(c_axial))


def _distance_gap(flow, t, center, R):
    '''g(u) = |x(u) - c|^2 - R^2 along the curve or profile (min over the circle for rotsym)'''
    center = np.asarray(center, dtype=np.float64)

    if flow.rotational:
        c_perp, c_axial, _ = flow.axial_offset(center)

        def gap(s):
            rho, z = flow.profile(np.atleast_1d(s), t)[:2]
            return (rho - c_perp)**2 + (z - c_axial)**2 - R**2
    else:
        def gap(s):
            s = np.atleast_1d(np.asarray(s, dtype=np.float64))
            x = flow.position(s[:, None], t)
            return np.sum((x - center)**2, axis=-1) - R**2
    return gap


def _scan_domain(flow, t, center, R):
    chart = flow.chart
    if chart.kind == 'periodic':
        return chart.lower, chart.upper
    reach = np.linalg.norm(np.asarray(center, dtype=np.float64) - flow.axis_origin) + R
    extent = flow.parameter_extent(t, reach)
    return max(chart.lower, -extent), min(chart.upper, extent)


def restrict_to_ball(flow, t, center, R, scan_cells=512, xtol=1e-13):
    '''Parameter sub-domains whose image lies in the open ball B_R(center) at time t

    Flows with monotone-|x| structure answer through :meth:`AncientFlow.ball_interval`.
    Otherwise the gap |x(u) - c|^2 - R^2 is sampled on a uniform grid of ``scan_cells`` cells
    (chart breakpoints added), and every sign change is refined with Brent's method.

    Parameters
    ----------
    flow : :class:`AncientFlow`
    t : float
        slice time
    center : array
        ball centre in R^N
    R : float
        ball radius, R >= 0 (R = 0 gives an empty restriction)
    scan_cells : int
        cells of the seeding grid
    xtol : float
        bracketing tolerance handed to brentq

    Returns
    -------
    :class:`BallRestriction`
    '''
    if R < 0:
        raise ValueError(f'ball radius must be non-negative, got {R}')
    center = np.asarray(center, dtype=np.float64)
    angular = flow.rotational and not on_axis(flow, center)
    if R == 0:
        return BallRestriction([], center, 0.0, t, xtol, angular)

    exact = flow.ball_interval(t, center, R)
    if exact is not None:
        intervals = [(float(a), float(b)) for a, b in exact if b > a]
        return BallRestriction(intervals, center, float(R), t, 0.0, angular)

    lo, hi = _scan_domain(flow, t, center, R)
    if not hi > lo:
        return BallRestriction([], center, float(R), t, xtol, angular)
    grid = np.linspace(lo, hi, scan_cells + 1)
    inner_breaks = [b for b in flow.chart.breakpoints if lo < b < hi]
    if inner_breaks:
        grid = np.unique(np.concatenate([grid, inner_breaks]))
    gap = _distance_gap(flow, t, center, R)
    values = gap(grid)
    inside = values < 0

    def root(a, b):
        return brentq(lambda s: float(gap(s)[0]), a, b, xtol=xtol)

    intervals = []
    start = lo if inside[0] else None
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        if inside[i] and not inside[i + 1]:
            end = root(a, b) if values[i + 1] > 0 else b
            intervals.append((start, end))
            start = None
        elif not inside[i] and inside[i + 1]:
            start = root(a, b) if values[i] > 0 else a
    if start is not None:
        intervals.append((start, hi))
    intervals = [(float(a), float(b)) for a, b in intervals if b > a]
    return BallRestriction(intervals, center, float(R), t, xtol, angular)


def split_at_breakpoints(flow, intervals):
    '''Split parameter intervals at the chart breakpoints'''
    pieces = []
    for a, b in intervals:
        cuts = [a] + [p for p in flow.chart.breakpoints if a < p < b] + [b]
        pieces.extend(zip(cuts[:-1], cuts[1:]))
    return pieces


class RescaledFlow(AncientFlow):
    '''Parabolic rescaling M^lam_t = lam^-1 M_{lam^2 t} of a flow'''

    def __init__(self, base, lam):
        if not lam > 0:
            raise ValueError(f'rescaling factor must be positive, got {lam}')
        self.base = base
        self.lam = float(lam)
        self.name = f'{base.name}@rescale({lam:g})'
        self.n, self.N = base.n, base.N
        self.chart = base.chart
        self.t_max = base.t_max / self.lam**2 if np.isfinite(base.t_max) else base.t_max
        self.is_self_shrinker = base.is_self_shrinker
        self.reaches_origin_at_zero = base.reaches_origin_at_zero
        self.translation = None if base.translation is None else self.lam * np.asarray(base.translation)
        self.axis_origin = base.axis_origin / self.lam

    def _t(self, t):
        return self.lam**2 * t

    def position(self, u, t):
        return self.base.position(u, self._t(t)) / self.lam

    def jacobian(self, u, t):
        return self.base.jacobian(u, self._t(t)) / self.lam

    def hessian(self, u, t):
        return self.base.hessian(u, self._t(t)) / self.lam

    def profile(self, u, t):
        return tuple(p / self.lam for p in self.base.profile(u, self._t(t)))

    def axial_offset(self, center):
        return RotationalFlow.axial_offset(self, center)

    def mean_curvature_exact(self, u, t):
        H = self.base.mean_curvature_exact(u, self._t(t))
        return None if H is None else self.lam * H

    def parameter_extent(self, t, radius):
        return self.base.parameter_extent(self._t(t), self.lam * radius)

    def ball_interval(self, t, center, R):
        return self.base.ball_interval(self._t(t), self.lam * np.asarray(center), self.lam * R)

    def entropy_hints(self, t):
        return [(x0 / self.lam, t0 / self.lam**2) for x0, t0 in self.base.entropy_hints(self._t(t))]


class ShiftedFlow(AncientFlow):
    '''Space-time translate M'_t = M_{t + t0} - x0, so that (x0, t0) becomes the origin'''

    def __init__(self, base, x0, t0=0.0):
        self.base = base
        self.x0 = np.asarray(x0, dtype=np.float64).reshape(base.N)
        self.t0 = float(t0)
        if self.t0 >= base.t_max:
            raise ValueError(f'cannot recentre {base.name} at t0 = {t0}: outside its time domain')
        self.name = f'{base.name}@shift'
        self.n, self.N = base.n, base.N
        self.chart = base.chart
        self.t_max = base.t_max - self.t0
        unmoved = not np.any(self.x0) and self.t0 == 0.0
        self.is_self_shrinker = base.is_self_shrinker and unmoved
        self.reaches_origin_at_zero = base.reaches_origin_at_zero and unmoved
        self.translation = base.translation
        self.axis_origin = base.axis_origin - self.x0

    def _t(self, t):
        return t + self.t0

    def position(self, u, t):
        return self.base.position(u, self._t(t)) - self.x0

    def jacobian(self, u, t):
        return self.base.jacobian(u, self._t(t))

    def hessian(self, u, t):
        return self.base.hessian(u, self._t(t))

    def profile(self, u, t):
        return self.base.profile(u, self._t(t))

    def axial_offset(self, center):
        return RotationalFlow.axial_offset(self, center)

    def mean_curvature_exact(self, u, t):
        return self.base.mean_curvature_exact(u, self._t(t))

    def parameter_extent(self, t, radius):
        return self.base.parameter_extent(self._t(t), radius + float(np.linalg.norm(self.x0)))

    def ball_interval(self, t, center, R):
        return self.base.ball_interval(self._t(t), np.asarray(center) + self.x0, R)

    def entropy_hints(self, t):
        return [(x0 - self.x0, s) for x0, s in self.base.entropy_hints(self._t(t))]


def parabolic_rescale(flow, r):
    '''Parabolic rescaling (r^-1 M_{r^2 t})_t of ``flow``; r = 1 returns the flow itself'''
    if not r > 0:
        raise ValueError(f'parabolic_rescale needs r > 0, got {r}')
    if r == 1:
        return flow
    return RescaledFlow(flow, r)


def recenter(flow, x0, t0=0.0):
    '''Move the space-time point (x0, t0) of ``flow`` to the origin'''
    x0 = np.asarray(x0, dtype=np.float64)
    if not np.any(x0) and t0 == 0.0:
        return flow
    return ShiftedFlow(flow, x0, t0)


def hausdorff_mass(flow, t, center, R, cfg=None):
    '''n-dimensional measure of M_t inside the ball B_R(center), by quadrature

    Raises :class:`pymcf.quad.QuadratureError` when the quadrature fails.
    '''
    from pymcf.quad import QuadConfig, integrate_slice

    cfg = cfg or QuadConfig()
    restriction = restrict_to_ball(flow, t, center, R, scan_cells=cfg.scan_cells)
    result = integrate_slice(flow, t, lambda geom: np.ones(len(geom)), restriction, cfg)
    return result.checked(cfg, f'hausdorff_mass({flow.name}, t={t})').value


def well_defined_mass(flow, r, cfg=None):
    '''Mass of M_{-r^2/4pi} in B_{sqrt(2n/pi) r}, finite for well-defined flows'''
    t = -r**2 / (4 * np.pi)
    return hausdorff_mass(flow, t, np.zeros(flow.N), np.sqrt(2 * flow.n / np.pi) * r, cfg)

