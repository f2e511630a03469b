'''
Tests of the backward heat kernel, the log-kernel and the heat-ball geometry.
'''

import numpy as np
import pytest

from pymcf.kernel import (HeatBall, KernelPoint, heat_ball_contains, heaviside, log_phi, phi,
                          phi_centered, phi_xt, positive_part, psi_r, slice_radius)


def test_phi_at_normalising_time():
    '''(-4 pi t)^(-1/2) = 1 at t = -1/(4 pi)'''
    value = phi(KernelPoint(x=[0.0, 0.0], t=-1 / (4 * np.pi)), n=1)
    assert abs(value - 1.0) < 1e-14, f'Phi(0, -1/4pi) = {value}, expected 1'


def test_phi_matches_closed_form():
    x = np.array([[0.3, -1.2], [2.0, 0.5]])
    t = -0.7
    expected = (4 * np.pi * 0.7)**-1 * np.exp(-np.sum(x**2, axis=-1) / (4 * 0.7))
    np.testing.assert_allclose(phi_xt(x, t, n=2), expected, rtol=1e-14)


def test_log_phi_does_not_overflow_near_zero():
    value = log_phi(np.zeros(2), -1e-300, n=2)
    assert np.isfinite(value), 'log Phi should stay finite as t -> 0'
    assert value > 600, 'log Phi should be large as t -> 0'


@pytest.mark.parametrize('t', [0.0, 1.0])
def test_kernel_needs_negative_time(t):
    with pytest.raises(ValueError):
        KernelPoint(x=[0.0, 0.0], t=t)
    with pytest.raises(ValueError):
        phi((np.zeros(2), t), n=1)


def test_phi_centered_is_a_shift():
    x = np.array([1.0, 2.0])
    center = (np.array([0.5, -1.0]), 2.0)
    shifted = phi_centered(x, 1.0, center, n=1)
    direct = phi_xt(x - center[0], -1.0, n=1)
    assert abs(shifted - direct) < 1e-15, 'recentred kernel differs from the shifted kernel'
    with pytest.raises(ValueError):
        phi_centered(x, 2.0, center, n=1)


def test_psi_r_sign_marks_the_heat_ball():
    hb = HeatBall(r=2.0, n=1)
    t = -hb.duration / np.e
    R = hb.slice_radius(t)
    inside = psi_r((np.array([0.9 * R, 0.0]), t), r=2.0, n=1)
    outside = psi_r((np.array([1.1 * R, 0.0]), t), r=2.0, n=1)
    assert inside > 0 and outside < 0, f'psi_r should change sign at the slice radius {R}'
    with pytest.raises(ValueError):
        psi_r((np.zeros(2), t), r=0.0, n=1)


def test_slice_radius_vanishes_at_window_ends():
    r, n = 3.0, 2
    lo = -r**2 / (4 * np.pi)
    assert slice_radius(r, lo * (1 - 1e-15), n) < 1e-6, 'slice radius should vanish at the bottom'
    assert slice_radius(r, -1e-300, n) < 1e-140, 'slice radius should vanish at the top'
    assert slice_radius(r, 1.0, n, clip=True) == 0.0
    with pytest.raises(ValueError):
        slice_radius(r, 2 * lo, n)


def test_heat_ball_max_radius():
    hb = HeatBall(r=4.0, n=2)
    t_star = -hb.r**2 / (4 * np.pi * np.e)
    assert abs(hb.slice_radius(t_star) - hb.max_radius) < 1e-12, \
        'slice radius should peak at t = -r^2/(4 pi e)'
    times = np.linspace(*hb.window, 2001)[1:-1]
    assert np.max(hb.slice_radius(times)) <= hb.max_radius + 1e-12
    assert abs(hb.max_radius - 4.0 * np.sqrt(2 / (2 * np.pi * np.e))) < 1e-14


def test_heat_ball_needs_positive_radius():
    with pytest.raises(ValueError):
        HeatBall(r=0.0, n=1)
    with pytest.raises(ValueError):
        HeatBall(r=1.0, n=0)


def test_heat_ball_contains():
    hb = HeatBall(r=1.0, n=1, x0=np.array([1.0, 1.0]), t0=5.0)
    t = 5.0 - hb.duration / np.e
    assert heat_ball_contains(hb, [1.0, 1.0], t)
    assert not heat_ball_contains(hb, [1.0 + 1.01 * hb.max_radius, 1.0], t)
    assert not heat_ball_contains(hb, [1.0, 1.0], 5.0), 'the top of the ball is open'
    assert not heat_ball_contains(hb, [1.0, 1.0], 5.0 - 1.01 * hb.duration), 'below the bottom of the ball'
    inside = heat_ball_contains(hb, np.array([[1.0, 1.0], [9.0, 9.0]]), t)
    np.testing.assert_array_equal(inside, [True, False])


def test_positive_part_and_heaviside():
    assert positive_part(-2.0) == 0.0
    assert positive_part(1.5) == 1.5
    assert heaviside(0.0) == 0.0, 'chi(0) = 0'
    assert heaviside(1e-300) == 1.0
    np.testing.assert_array_equal(heaviside(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(positive_part(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])


def test_phi_worked_value():
    value = phi((np.array([2.0, 0.0]), -1.0), n=1)
    assert abs(value - np.exp(-1) / np.sqrt(4 * np.pi)) < 1e-15
    radii = np.linspace(0, 5, 51)
    values = phi_xt(np.stack([radii, np.zeros_like(radii)], axis=-1), -1.0, n=1)
    assert np.all(np.diff(values) < 0), 'Phi decreases away from the centre'


@pytest.mark.parametrize('n', [1, 2])
def test_psi_r_vanishes_on_the_boundary(n):
    r = 2.5
    times = -r**2 / (4 * np.pi) * np.array([0.99, 0.7, 1 / np.e, 0.1, 1e-4])
    for t in times:
        R = slice_radius(r, t, n)
        x = np.zeros(n + 1)
        x[0] = R
        assert abs(psi_r((x, t), r, n)) < 1e-12, f'psi_r at the boundary, t={t}'
    centre = psi_r((np.zeros(n + 1), -r**2 / (4 * np.pi * np.e)), r, n)
    assert abs(centre - n / 2) < 1e-14


def test_slice_radius_scaling():
    r, t, n = 1.5, -0.05, 2
    for lam in (0.1, 3.0, 40.0):
        scaled = slice_radius(lam * r, lam**2 * t, n)
        assert abs(scaled - lam * slice_radius(r, t, n)) < 1e-13 * lam
