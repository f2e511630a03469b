'''
Static planes and the round self-shrinkers: lines and planes (possibly shifted off the origin),
shrinking circles and 2-spheres, and the shrinking cylinder S^1 x R.
'''

import numpy as np

from pymcf.flows.base import Chart, CurveFlow, RotationalFlow


def _interval_around(center, half_width_sq):
    if half_width_sq <= 0:
        return []
    w = np.sqrt(half_width_sq)
    return [(center - w, center + w)]


def _arc_intervals(phi, width, lower, period):
    '''Intervals of the periodic chart [lower, lower + period) covering the arc (phi - w, phi + w)'''
    if width <= 0:
        return []
    if width >= np.pi:
        return [(lower, lower + period)]
    scale = period / (2 * np.pi)
    a = (phi - width) * scale
    b = (phi + width) * scale
    a = lower + np.mod(a - lower, period)
    b = a + 2 * width * scale
    upper = lower + period
    if b <= upper:
        return [(a, b)]
    return [(lower, b - period), (a, upper)]


class Line(CurveFlow):
    '''Static line {(s, offset)}, a self-shrinker when it passes through the origin'''

    t_max = np.inf

    def __init__(self, offset=0.0):
        super().__init__(Chart('interval', -np.inf, np.inf))
        self.offset = float(offset)
        self.name = 'line' if self.offset == 0 else 'shifted_line'
        self.is_self_shrinker = self.offset == 0
        self.reaches_origin_at_zero = self.offset == 0

    def curve(self, s, t):
        s = np.asarray(s, dtype=np.float64)
        p = np.stack([s, np.full_like(s, self.offset)], axis=-1)
        d1 = np.stack([np.ones_like(s), np.zeros_like(s)], axis=-1)
        return p, d1, np.zeros_like(p)

    def mean_curvature_exact(self, u, t):
        return np.zeros((len(u), 2))

    def parameter_extent(self, t, radius):
        return float(radius)

    def ball_interval(self, t, center, R):
        return _interval_around(center[0], R**2 - (self.offset - center[1])**2)

    def entropy_hints(self, t):
        return [(np.array([0.0, self.offset]), abs(t))]


class Plane(RotationalFlow):
    '''Static plane {x_3 = offset} in R^3 in polar coordinates about the x_3 axis'''

    t_max = np.inf

    def __init__(self, offset=0.0):
        super().__init__(Chart('rotsym', 0.0, np.inf))
        self.offset = float(offset)
        self.name = 'plane' if self.offset == 0 else 'shifted_plane'
        self.is_self_shrinker = self.offset == 0
        self.reaches_origin_at_zero = self.offset == 0

    def profile(self, u, t):
        u = np.asarray(u, dtype=np.float64)
        zero = np.zeros_like(u)
        return u, zero + self.offset, zero + 1.0, zero, zero, zero

    def mean_curvature_exact(self, u, t):
        return np.zeros((len(u), 3))

    def parameter_extent(self, t, radius):
        return float(radius)

    def ball_interval(self, t, center, R):
        c_perp, c_axial, _ = self.axial_offset(center)
        gap = R**2 - (self.offset - c_axial)**2
        if gap <= 0:
            return []
        w = np.sqrt(gap)
        return [(max(0.0, c_perp - w), c_perp + w)] if c_perp + w > 0 else []

    def entropy_hints(self, t):
        return [(np.array([0.0, 0.0, self.offset]), abs(t))]


class ShrinkingCircle(CurveFlow):
    '''Circle of radius sqrt(-2t) about the origin, parametrised by angle'''

    name = 'circle'
    is_self_shrinker = True
    t_max = 0.0

    def __init__(self):
        super().__init__(Chart('periodic', 0.0, 2 * np.pi))

    def radius(self, t):
        return np.sqrt(-2 * t)

    def curve(self, s, t):
        s = np.asarray(s, dtype=np.float64)
        rho = self.radius(t)
        e = np.stack([np.cos(s), np.sin(s)], axis=-1)
        d1 = rho * np.stack([-np.sin(s), np.cos(s)], axis=-1)
        return rho * e, d1, -rho * e

    def mean_curvature_exact(self, u, t):
        return self.position(u, t) / (2 * t)

    def ball_interval(self, t, center, R):
        rho = self.radius(t)
        c = float(np.hypot(center[0], center[1]))
        if c == 0:
            return [(0.0, 2 * np.pi)] if rho < R else []
        kappa = (rho**2 + c**2 - R**2) / (2 * rho * c)
        width = float(np.arccos(np.clip(kappa, -1.0, 1.0)))
        return _arc_intervals(float(np.arctan2(center[1], center[0])), width, 0.0, 2 * np.pi)

    def entropy_hints(self, t):
        return [(np.zeros(2), -t)]


class ShrinkingSphere(RotationalFlow):
    '''2-sphere of radius sqrt(-4t) about the origin, profile parametrised by polar angle'''

    name = 'sphere2'
    is_self_shrinker = True
    t_max = 0.0

    def __init__(self):
        super().__init__(Chart('rotsym', 0.0, np.pi))

    def radius(self, t):
        return np.sqrt(-4 * t)

    def profile(self, u, t):
        u = np.asarray(u, dtype=np.float64)
        rho = self.radius(t)
        s, c = np.sin(u), np.cos(u)
        return rho * s, rho * c, rho * c, -rho * s, -rho * s, -rho * c

    def mean_curvature_exact(self, u, t):
        return self.position(u, t) / (2 * t)

    def ball_interval(self, t, center, R):
        c_perp, c_axial, _ = self.axial_offset(center)
        if c_perp > 0:
            return None
        rho = self.radius(t)
        if c_axial == 0:
            return [(0.0, np.pi)] if rho < R else []
        kappa = (rho**2 + c_axial**2 - R**2) / (2 * rho * c_axial)
        angle = float(np.arccos(np.clip(kappa, -1.0, 1.0)))
        if c_axial > 0:
            return [(0.0, angle)] if kappa < 1 else []
        return [(angle, np.pi)] if kappa > -1 else []

    def entropy_hints(self, t):
        return [(np.zeros(3), -t)]


class ShrinkingCylinder(RotationalFlow):
    '''S^1(sqrt(-2t)) x R about the x_3 axis, profile parametrised by height'''

    name = 'cylinder'
    is_self_shrinker = True
    t_max = 0.0

    def __init__(self):
        super().__init__(Chart('rotsym', -np.inf, np.inf))

    def radius(self, t):
        return np.sqrt(-2 * t)

    def profile(self, u, t):
        u = np.asarray(u, dtype=np.float64)
        zero = np.zeros_like(u)
        return zero + self.radius(t), u, zero, zero + 1.0, zero, zero

    def mean_curvature_exact(self, u, t):
        x = self.position(u, t) - self.axis_origin
        x[:, 2] = 0.0
        return x / (2 * t)

    def parameter_extent(self, t, radius):
        return float(radius)

    def ball_interval(self, t, center, R):
        c_perp, c_axial, _ = self.axial_offset(center)
        return _interval_around(c_axial, R**2 - (self.radius(t) - c_perp)**2)

    def entropy_hints(self, t):
        return [(np.zeros(3), -t)]
