'''
Angenent oval: the compact convex ancient curve-shortening flow cos x = e^t cosh y, t < 0.

The curve is covered by four patches glued at the points where its tangent is at 45 degrees:

    u in [0, 1)  right side   x =  arccos(e^t cosh y),  y from -y* to y*
    u in [1, 2)  top tip      y =  arccosh(e^-t cos x), x from x* to -x*
    u in [2, 3)  left side    x = -arccos(e^t cosh y),  y from y* to -y*
    u in [3, 4)  bottom tip   y = -arccosh(e^-t cos x), x from -x* to x*

with cosh(2y*) = e^(-2t) and cos^2(x*) = (1 + e^(2t))/2. Every formula is kept in a form that
stays finite for very negative t, where the oval is two nearly parallel lines of length ~ -2t.
'''

import numpy as np

from pymcf.flows.base import Chart, CurveFlow
from pymcf.flows.translators import log_cosh


def switch_points(t):
    '''(x*, y*) where the parametrisation changes patch'''
    one_minus = -np.expm1(4 * t)
    y_star = 0.5 * (-2 * t + np.log1p(np.sqrt(one_minus)))
    x_star = np.arcsin(np.sqrt(-np.expm1(2 * t) / 2))
    return float(x_star), float(y_star)


def side(y, t):
    '''x = arccos(e^t cosh y) and its first two y-derivatives'''
    g = 0.5 * (np.exp(t + y) + np.exp(t - y))
    dg = 0.5 * (np.exp(t + y) - np.exp(t - y))
    # 1 - g^2 = 1 - e^2t - e^2t sinh^2 y
    slack = -np.expm1(2 * t) - dg**2
    root = np.sqrt(slack)
    x = np.arctan2(root, g)
    dx = -dg / root
    d2x = -g / root - g * dg**2 / slack**1.5
    return x, dx, d2x


def tip(x, t):
    '''y = arccosh(e^-t cos x) and its first two x-derivatives'''
    c = np.cos(x)
    tan = np.tan(x)
    # 1 - q with q = e^2t / cos^2 x
    slack = (-np.expm1(2 * t) - np.sin(x)**2) / c**2
    q = 1 - slack
    root = np.sqrt(slack)
    y = -t + np.log(c) + np.log1p(root)
    dy = -tan / root
    d2y = -1 / (c**2 * root) - q * tan**2 / slack**1.5
    return y, dy, d2y


class AngenentOval(CurveFlow):
    '''Angenent oval cos x = e^t cosh y, extinct at the space-time origin'''

    name = 'angenent_oval'
    t_max = 0.0
    reaches_origin_at_zero = True

    def __init__(self):
        super().__init__(Chart('periodic', 0.0, 4.0, breakpoints=(1.0, 2.0, 3.0)))

    def curve(self, s, t):
        s = np.mod(np.asarray(s, dtype=np.float64), 4.0)
        patch = np.clip(np.floor(s).astype(int), 0, 3)
        local = s - patch
        x_star, y_star = switch_points(t)

        p = np.empty(s.shape + (2,))
        d1 = np.empty_like(p)
        d2 = np.empty_like(p)

        for k, sign in ((0, 1.0), (2, -1.0)):
            m = patch == k
            # right side runs upwards, left side downwards
            y = sign * (-y_star + 2 * y_star * local[m])
            dy = sign * 2 * y_star
            x, dx, d2x = side(y, t)
            p[m] = np.stack([sign * x, y], axis=-1)
            d1[m] = np.stack([sign * dx * dy, np.full_like(y, dy)], axis=-1)
            d2[m] = np.stack([sign * d2x * dy**2, np.zeros_like(y)], axis=-1)

        for k, sign in ((1, 1.0), (3, -1.0)):
            m = patch == k
            # top tip runs leftwards, bottom tip rightwards
            x = sign * (x_star - 2 * x_star * local[m])
            dx = -sign * 2 * x_star
            y, dy, d2y = tip(x, t)
            p[m] = np.stack([x, sign * y], axis=-1)
            d1[m] = np.stack([np.full_like(x, dx), sign * dy * dx], axis=-1)
            d2[m] = np.stack([np.zeros_like(x), sign * d2y * dx**2], axis=-1)

        return p, d1, d2

    def implicit_residual(self, u, t):
        '''cos x - e^t cosh y along the parametrisation'''
        x, y = self.position(u, t).T
        return np.cos(x) - np.exp(t + log_cosh(y))

    def entropy_hints(self, t):
        '''The centre at scales well below the length of the oval, where it looks like two lines'''
        return [(np.zeros(2), -t / 16), (np.zeros(2), -t / 64)]
