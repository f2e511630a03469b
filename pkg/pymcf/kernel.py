'''
Closed-form backward heat kernel, log-kernel and heat-ball geometry.

Everything here is a pure function of its arguments. Kernel values are formed in log-space
and exponentiated last, because (-4*pi*t)**(-n/2) overflows double precision as t -> 0.

Conventions: ``x`` is an ambient vector (or a stack of them, last axis = ambient dimension N),
``t`` a time, ``n`` the intrinsic dimension of the flow.
'''

from dataclasses import dataclass, field

import numpy as np


# roundoff allowance for sqrt arguments at the heat-ball window endpoints
SQRT_CLAMP = 1e-14


@dataclass(frozen=True)
class KernelPoint:
    '''A space-time point (x, t) with t < 0 at which the kernel is evaluated'''
    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=np.float64))
        if x.ndim != 1 or x.size < 1:
            raise ValueError('KernelPoint.x must be a non-empty ambient vector')
        if not self.t < 0:
            raise ValueError(f'KernelPoint needs t < 0, got t = {self.t}')
        object.__setattr__(self, 'x', x)


@dataclass(frozen=True)
class HeatBall:
    '''Heat-ball E_r centred at the space-time point (x0, t0)

    E_r = {(x, t) : psi_r(x - x0, t - t0) > 0}, a bounded set living in the time window
    (t0 - r**2/(4*pi), t0). Its time slices are open balls of radius R_r(t - t0).

    Parameters
    ----------
    r : float
        heat-ball radius, r > 0
    n : int
        intrinsic dimension of the flow the ball is used with
    x0 : array
        spatial centre, defaults to the origin of R^N (give N through ``x0``)
    t0 : float
        time of the centre (top of the ball)
    '''
    r: float
    n: int
    x0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    t0: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f'heat-ball radius must be positive, got r = {self.r}')
        if self.n < 1:
            raise ValueError('intrinsic dimension n must be >= 1')
        object.__setattr__(self, 'x0', np.atleast_1d(np.asarray(self.x0, dtype=np.float64)))
        object.__setattr__(self, 'r', float(self.r))
        object.__setattr__(self, 't0', float(self.t0))

    @property
    def window(self):
        '''Open time window (t0 - r^2/4pi, t0) of the ball'''
        return self.t0 - self.r**2 / (4 * np.pi), self.t0

    @property
    def duration(self):
        return self.r**2 / (4 * np.pi)

    @property
    def max_radius(self):
        '''sup_t R_r(t), attained at t - t0 = -r^2/(4 pi e)'''
        return self.r * np.sqrt(self.n / (2 * np.pi * np.e))

    def slice_radius(self, t):
        '''Radius of the time slice of the ball at absolute time t (0 outside the window)'''
        return slice_radius(self.r, np.asarray(t, dtype=np.float64) - self.t0, self.n, clip=True)

    def with_radius(self, r):
        return HeatBall(r=r, n=self.n, x0=self.x0, t0=self.t0)


def _check_negative_time(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(~(t < 0)):
        raise ValueError('backward heat kernel is only defined for t < 0 (relative to the centre)')
    return t


def log_phi(x, t, n):
    '''log of the backward heat kernel, |x|^2/(4t) - (n/2) log(-4 pi t)

    Args:
        x (array)  : ambient vector(s), last axis is the ambient dimension
        t (float)  : time(s), must be negative
        n (int)    : intrinsic dimension

    Returns:
        log_phi (float or array)
    '''
    t = _check_negative_time(t)
    x = np.asarray(x, dtype=np.float64)
    sq = np.sum(x * x, axis=-1)
    return sq / (4 * t) - 0.5 * n * np.log(-4 * np.pi * t)


def phi(p, n):
    '''Backward heat kernel Phi(x, t) = (-4 pi t)^(-n/2) exp(|x|^2/(4t)) at a :class:`KernelPoint`

    Raises ValueError for t >= 0.
    '''
    if isinstance(p, KernelPoint):
        return float(np.exp(log_phi(p.x, p.t, n)))
    x, t = p
    return np.exp(log_phi(x, t, n))


def phi_xt(x, t, n):
    '''Vectorised Phi(x, t) for stacks of points'''
    return np.exp(log_phi(x, t, n))


def phi_centered(x, t, center, n):
    '''Recentred kernel Phi_{x0,t0}(x, t) = Phi(x - x0, t - t0), defined for t < t0

    Args:
        x (array)        : ambient vector(s)
        t (float)        : time
        center (tuple)   : (x0, t0)
        n (int)          : intrinsic dimension
    '''
    x0, t0 = center
    tau = np.asarray(t, dtype=np.float64) - t0
    if np.any(~(tau < 0)):
        raise ValueError(f'phi_centered needs t < t0 (t = {t}, t0 = {t0})')
    return np.exp(log_phi(np.asarray(x, dtype=np.float64) - np.asarray(x0, dtype=np.float64), tau, n))


def psi_r(p, r, n):
    '''Log-kernel psi_r = log(Phi r^n) = |x|^2/(4t) - (n/2) log(-4 pi t / r^2)

    psi_r is positive exactly inside the heat-ball E_r centred at the origin.
    Accepts a :class:`KernelPoint` or a tuple (x, t) of arrays.
    '''
    if not r > 0:
        raise ValueError(f'psi_r needs r > 0, got {r}')
    if isinstance(p, KernelPoint):
        return float(log_phi(p.x, p.t, n) + n * np.log(r))
    x, t = p
    return log_phi(x, t, n) + n * np.log(r)


def slice_radius(r, t, n, clip=False):
    '''Heat-ball slice radius R_r(t) = sqrt(2 n t log(-4 pi t / r^2)) for -r^2/(4pi) < t < 0

    Args:
        r (float)    : heat-ball radius
        t (float)    : time relative to the centre of the ball
        n (int)      : intrinsic dimension
        clip (bool)  : if True, times outside the window return 0 instead of raising

    Returns:
        R (float or array) : slice radius, -> 0 at both window endpoints
    '''
    t = np.asarray(t, dtype=np.float64)
    inside = (t < 0) & (t > -r**2 / (4 * np.pi))
    if not clip and np.any(~inside):
        raise ValueError(f'slice_radius: t = {t} lies outside the window (-r^2/4pi, 0) for r = {r}')
    with np.errstate(divide='ignore', invalid='ignore'):
        arg = 2 * n * t * np.log(-4 * np.pi * t / r**2)
    arg = np.where(inside, arg, 0.0)
    # endpoint roundoff can give tiny negative arguments
    arg = np.where((arg < 0) & (arg >= -SQRT_CLAMP), 0.0, arg)
    radius = np.sqrt(np.maximum(arg, 0.0))
    if radius.ndim == 0:
        return float(radius)
    return radius


def heat_ball_contains(hb, x, t):
    '''True iff (x, t) lies in the open heat-ball ``hb``'''
    x = np.asarray(x, dtype=np.float64)
    tau = np.asarray(t, dtype=np.float64) - hb.t0
    inside = (tau < 0) & (tau > -hb.r**2 / (4 * np.pi))
    R = slice_radius(hb.r, np.where(inside, tau, -hb.r**2 / (8 * np.pi)), hb.n, clip=True)
    dist = np.sqrt(np.sum((x - hb.x0)**2, axis=-1))
    result = inside & (dist < R)
    if np.ndim(result) == 0:
        return bool(result)
    return result


def positive_part(x):
    '''[x]_+ = max(x, 0)'''
    result = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    if result.ndim == 0:
        return float(result)
    return result


def heaviside(x):
    '''chi(x): 1 for x > 0, else 0'''
    result = (np.asarray(x, dtype=np.float64) > 0).astype(np.float64)
    if result.ndim == 0:
        return float(result)
    return result
