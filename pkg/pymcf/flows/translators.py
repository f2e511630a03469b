'''
Translating solitons M_t = M_0 + t v with v the unit vector e_N.

The grim reaper y = -log cos x is parametrised by arclength from its apex. The bowl soliton has
no closed form: its profile z = f(rho) solves the rotationally symmetric translator equation

    f'' / (1 + f'^2) + (n - 1) f' / rho = 1,    f(0) = f'(0) = 0,

which is integrated once at construction and evaluated through the dense ODE output.
'''

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from pymcf.flows.base import Chart, CurveFlow, RotationalFlow


LOG2 = np.log(2.0)


def log_cosh(s):
    '''log cosh s without overflow'''
    a = np.abs(s)
    return a + np.log1p(np.exp(-2 * a)) - LOG2


class GrimReaper(CurveFlow):
    '''Grim reaper y = -log cos x + t, translating with unit speed in the x_2 direction

    Arclength parametrisation from the apex (0, t):
    x = gd(s) = arctan(sinh s), y = log cosh s + t.
    '''

    name = 'grim_reaper'
    t_max = np.inf
    reaches_origin_at_zero = True

    def __init__(self):
        super().__init__(Chart('interval', -np.inf, np.inf))
        self.translation = np.array([0.0, 1.0])

    def curve(self, s, t):
        s = np.asarray(s, dtype=np.float64)
        sech = 1 / np.cosh(np.minimum(np.abs(s), 700.0))
        tanh = np.tanh(s)
        p = np.stack([np.arctan(np.sinh(np.clip(s, -700.0, 700.0))), log_cosh(s) + t], axis=-1)
        d1 = np.stack([sech, tanh], axis=-1)
        d2 = np.stack([-sech * tanh, sech**2], axis=-1)
        return p, d1, d2

    def mean_curvature_exact(self, u, t):
        s = np.asarray(u, dtype=np.float64)[:, 0]
        sech = 1 / np.cosh(np.minimum(np.abs(s), 700.0))
        return np.stack([-sech * np.tanh(s), sech**2], axis=-1)

    def parameter_extent(self, t, radius):
        # |x| >= y >= |s| - log 2 + t
        return float(max(0.0, radius + LOG2 - t))

    def entropy_hints(self, t):
        '''Centres far up the arms, where the curve looks like two parallel lines'''
        apex = np.array([0.0, t])
        return [(apex + self.translation * 10 * np.sqrt(T), T) for T in (1e4, 1e6)]


def bowl_profile(n=2, rho_max=4096.0, rho_start=1e-3):
    '''Solve the translator profile ODE for w = f', f on [rho_start, rho_max]

    Parameters
    ----------
    n : int
        dimension of the bowl
    rho_max : float
        largest radius of the computed profile
    rho_start : float
        radius where the ODE takes over from the series expansion at the tip

    Returns
    -------
    solution : OdeSolution
        dense output of (w, f)
    series : tuple
        coefficients (a, b) of w = a rho + b rho^3 near the tip
    '''
    a = 1.0 / n
    b = 1.0 / (n**3 * (n + 2))

    def rhs(rho, y):
        w = y[0]
        return [(1 + w * w) * (1 - (n - 1) * w / rho), w]

    y0 = [a * rho_start + b * rho_start**3, a * rho_start**2 / 2 + b * rho_start**4 / 4]
    sol = solve_ivp(rhs, (rho_start, rho_max), y0, method='Radau', rtol=1e-12, atol=1e-14,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f'bowl profile ODE failed: {sol.message}')
    return sol.sol, (a, b)


class Bowl(RotationalFlow):
    '''Bowl soliton in R^3: the rotationally symmetric convex translator z = f(rho) + t'''

    name = 'bowl'
    t_max = np.inf
    reaches_origin_at_zero = True

    def __init__(self, rho_max=4096.0, rho_start=1e-3):
        super().__init__(Chart('rotsym', 0.0, float(rho_max)))
        self.rho_max = float(rho_max)
        self.rho_start = float(rho_start)
        self.translation = np.array([0.0, 0.0, 1.0])
        self._solution, self._series = bowl_profile(self.n, self.rho_max, self.rho_start)
        self.f_max = float(self._solution(self.rho_max)[1])

    def height(self, rho):
        '''Profile f(rho) and its first two derivatives'''
        rho = np.asarray(rho, dtype=np.float64)
        a, b = self._series
        near = rho < self.rho_start
        clipped = np.clip(rho, self.rho_start, self.rho_max)
        w, f = self._solution(clipped)
        w = np.where(near, a * rho + b * rho**3, w)
        f = np.where(near, a * rho**2 / 2 + b * rho**4 / 4, f)
        with np.errstate(divide='ignore', invalid='ignore'):
            dw = (1 + w * w) * (1 - (self.n - 1) * w / rho)
        dw = np.where(near, a + 3 * b * rho**2, dw)
        return f, w, dw

    def profile(self, u, t):
        u = np.asarray(u, dtype=np.float64)
        f, w, dw = self.height(u)
        zero = np.zeros_like(u)
        return u, f + t, zero + 1.0, w, zero, dw

    def mean_curvature_exact(self, u, t):
        geom_n = self.normal_vectors(u, t)
        v_perp = geom_n[:, 2][:, None] * geom_n
        return v_perp

    def normal_vectors(self, u, t):
        '''Unit normal (-f' e_rho + e_3) / sqrt(1 + f'^2)'''
        u = np.asarray(u, dtype=np.float64)
        w = self.height(u[:, 0])[1]
        c, s = np.cos(u[:, 1]), np.sin(u[:, 1])
        norm = np.sqrt(1 + w * w)
        return np.stack([-w * c, -w * s, np.ones_like(w)], axis=-1) / norm[:, None]

    def parameter_extent(self, t, radius):
        '''|x| >= max(rho, f(rho) + t), so rho beyond min(radius, f^-1(radius - t)) is outside'''
        target = radius - t
        if target <= 0:
            return 0.0
        if target >= self.f_max:
            bound = float(radius)
        else:
            bound = min(float(radius), brentq(lambda r: float(self.height(r)[0]) - target, 0.0, self.rho_max))
        if bound > self.rho_max:
            print(f'WARNING. bowl profile computed up to rho = {self.rho_max:g}; '
                  f'ball of radius {radius:.4g} at t = {t:.4g} clipped')
            return self.rho_max
        return bound

    def entropy_hints(self, t):
        '''Centres high up the axis, where the bowl looks like a shrinking cylinder'''
        return [(np.array([0.0, 0.0, t + T]), T) for T in (1e4, 1e6)]
