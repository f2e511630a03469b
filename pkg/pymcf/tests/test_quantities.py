'''
Tests of Huisken's and Ecker's integrals on flows with known values.

Self-shrinkers centred at the space-time origin have constant Huisken integral and constant
Ecker ratio, both equal to their entropy.
'''

import numpy as np
import pytest

from pymcf.flows import get_flow
from pymcf.kernel import HeatBall
from pymcf.quantities import (QuantityReport, deficit_heatball, deficit_phi, ecker_ratio,
                              gaussian_density, huisken_integral, huisken_rate, reports_to_frame,
                              residual_er35)
import pymcf.tests.testdata as testdata


@pytest.mark.parametrize('name', sorted(testdata.SHRINKER_ENTROPY))
@pytest.mark.parametrize('t', [-0.5, -3.0])
def test_huisken_on_self_shrinkers(name, t):
    flow = get_flow(name)
    report = huisken_integral(flow, t, cfg=testdata.loose_config())
    expected = testdata.SHRINKER_ENTROPY[name]
    assert abs(report.value - expected) < 1e-6, \
        f'Huisken integral of {name} at t={t} is {report.value}, expected {expected}'
    assert report.kind == 'huisken' and report.parameter == t


@pytest.mark.parametrize('name', ['shifted_line', 'shifted_plane'])
def test_huisken_on_shifted_static_flows(name):
    '''A line or plane at distance d from the origin: exp(d^2 / 4t)'''
    flow = get_flow(name)
    for t in (-0.25, -1.0, -10.0):
        value = huisken_integral(flow, t, cfg=testdata.loose_config()).value
        assert abs(value - np.exp(1 / (4 * t))) < 1e-7, f'{name} at t={t}: {value}'


def test_huisken_off_axis_centre():
    '''Sphere with the kernel centred off its symmetry axis'''
    sphere = get_flow('sphere2')
    cfg = testdata.loose_config()
    x0 = np.array([0.3, -0.2, 0.1])
    value = huisken_integral(sphere, -0.5, (x0, 0.0), cfg).value
    rotated = huisken_integral(sphere, -0.5, (np.array([0.0, 0.0, np.linalg.norm(x0)]), 0.0), cfg).value
    assert abs(value - rotated) < 1e-6, 'Huisken integral of the sphere is rotation invariant'
    assert value < testdata.SPHERE2_ENTROPY


def test_huisken_rate_vanishes_on_shrinkers():
    for name in ('circle', 'sphere2'):
        rate = huisken_rate(get_flow(name), -1.0, cfg=testdata.loose_config()).value
        assert abs(rate) < 1e-8, f'{name} should have zero Huisken deficit, got {rate}'


def test_huisken_is_monotone_on_the_grim_reaper():
    reaper = get_flow('grim_reaper')
    cfg = testdata.loose_config()
    values = [huisken_integral(reaper, t, cfg=cfg).value for t in (-0.25, -1.0, -4.0, -16.0)]
    assert np.all(np.diff(values) > 0), f'Huisken integral should grow backwards in time: {values}'
    assert 1 < values[0] and values[-1] < testdata.TWO_LINES


def test_huisken_deficit_identity():
    '''Huisken(b) - Huisken(a) = -iint_a^b deficit Phi'''
    reaper = get_flow('grim_reaper')
    cfg = testdata.loose_config()
    a, b = -4.0, -1.0
    drop = huisken_integral(reaper, b, cfg=cfg).value - huisken_integral(reaper, a, cfg=cfg).value
    deficit = deficit_phi(reaper, a, b, cfg=cfg).value
    assert deficit > 0
    assert abs(drop + deficit) < 1e-5, f'drop {drop} and deficit {deficit} do not cancel'


@pytest.mark.parametrize('name', ['line', 'circle'])
@pytest.mark.parametrize('r', [0.5, 2.0])
def test_ecker_ratio_on_self_shrinkers(name, r):
    flow = get_flow(name)
    report = ecker_ratio(flow, HeatBall(r=r, n=flow.n), testdata.loose_config())
    expected = testdata.SHRINKER_ENTROPY[name]
    assert abs(report.value - expected) < 1e-5, \
        f'Ecker ratio of {name} at r={r} is {report.value}, expected {expected}'
    assert report.kind == 'ecker_ratio'


def test_ecker_ratio_on_the_plane():
    plane = get_flow('plane')
    report = ecker_ratio(plane, HeatBall(r=1.0, n=2, x0=np.zeros(3)), testdata.loose_config())
    assert abs(report.value - 1.0) < 1e-5, f'Ecker ratio of the plane is {report.value}'


def test_deficit_vanishes_on_shrinkers():
    circle = get_flow('circle')
    cfg = testdata.loose_config()
    weighted = deficit_heatball(circle, HeatBall(r=1.0, n=1), weighted=True, cfg=cfg)
    plain = deficit_heatball(circle, HeatBall(r=1.0, n=1), weighted=False, cfg=cfg)
    assert abs(weighted.value) < 1e-8 and abs(plain.value) < 1e-8
    assert weighted.kind == 'deficit_phi' and plain.kind == 'deficit_plain'


def test_gaussian_density():
    cfg = testdata.loose_config()
    reaper = gaussian_density(get_flow('grim_reaper'), cfg=cfg)
    assert abs(reaper.value - 1.0) < 1e-3, f'grim reaper is smooth at the origin: {reaper.value}'
    circle = gaussian_density(get_flow('circle'), cfg=cfg)
    assert abs(circle.value - testdata.CIRCLE_ENTROPY) < 1e-6
    assert circle.converged


def test_residual_vanishes_on_the_circle():
    cfg = testdata.loose_config()
    report = residual_er35(get_flow('circle'), 1.0, cfg)
    assert report.value < 1e-5, f'finite-r identity residual {report.value}'
    assert report.details['deficit_phi'] == pytest.approx(0.0, abs=1e-8)


def test_reports_table():
    reports = [QuantityReport('huisken', -1.0, np.zeros(2), 0.0, 1.5, 1e-9),
               QuantityReport('ecker_ratio', 2.0, np.array([0.5, 0.0]), 1.0, 1.4, 1e-8)]
    frame = reports_to_frame(reports)
    assert list(frame.columns) == ['kind', 'parameter', 'center_x', 'center_t', 'value', 'error']
    assert frame['center_x'][1] == '0.5 0'
    with pytest.raises(ValueError):
        QuantityReport('volume', 1.0, np.zeros(2), 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        huisken_integral(get_flow('circle'), -1.0, (np.zeros(3), 0.0))
