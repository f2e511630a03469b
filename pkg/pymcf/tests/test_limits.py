'''
End-to-end tests of the large-scale limits, the finite-r identity and the limit at zero.

These run full schedules of heat-ball integrals and take several minutes.
'''

import json

import numpy as np
import pytest

from pymcf.flows import get_flow
from pymcf.kernel import HeatBall
from pymcf.limits import (DEFAULT_RADII, check_schedule, limit_at_zero, verify_corollary32,
                          verify_deficit_budget, verify_integrated_huisken, verify_theorem1)
from pymcf.quantities import (deficit_heatball, ecker_ratio, huisken_integral, huisken_rate,
                              residual_er35)
import pymcf.tests.testdata as testdata


def test_check_schedule():
    assert len(check_schedule(DEFAULT_RADII, 'radius', +1)) == 7
    with pytest.raises(ValueError):
        check_schedule([1, 2, 4, 8], 'radius', +1)
    with pytest.raises(ValueError):
        check_schedule([1, 2, 4, 8, 16], 'time', -1)
    with pytest.raises(ValueError):
        check_schedule([1, 2, 4, 8, 20], 'radius', +1)
    with pytest.raises(ValueError):
        check_schedule([16, 8, 4, 2, 1], 'radius', +1)


@pytest.mark.parametrize('name', ['plane', 'circle', 'sphere2', 'cylinder'])
@pytest.mark.parametrize('r', [0.5, 1.0, 2.0, 8.0])
def test_ecker_equals_huisken_on_self_shrinkers(name, r):
    flow = get_flow(name)
    cfg = testdata.loose_config()
    ecker = ecker_ratio(flow, HeatBall(r=r, n=flow.n, x0=np.zeros(flow.N)), cfg).value
    for t in (-0.1, -1.0, -10.0):
        huisken = huisken_integral(flow, t, cfg=cfg).value
        assert abs(ecker - huisken) < 1e-3, f'{name}: ecker {ecker} at r={r}, huisken {huisken} at t={t}'


@pytest.mark.parametrize('name', ['plane', 'circle'])
def test_theorem1_on_self_shrinkers(name):
    flow = get_flow(name)
    report = verify_theorem1(flow, cfg=testdata.strict_config(threads=4))
    expected = testdata.SHRINKER_ENTROPY[name]
    assert report.verdict == 'PASS', f'{name}: {report.to_json()}'
    assert abs(report.ecker_limit.limit - expected) < 1e-4
    assert abs(report.huisken_limit.limit - expected) < 1e-4
    assert report.ordering_holds and report.ecker_monotone and report.huisken_monotone
    assert report.finiteness['finite']
    assert not report.failures
    payload = json.loads(report.to_json())
    assert payload['verdict'] == 'PASS'
    assert set(payload['series']) == {'ecker', 'huisken', 'ordering'}


def test_theorem1_is_centre_independent():
    moved = get_flow('circle', recenter=[[0.5, 0.0], -1.0])
    report = verify_theorem1(moved, cfg=testdata.strict_config(threads=4))
    assert report.verdict == 'PASS', report.to_json()
    assert abs(report.huisken_limit.limit - testdata.CIRCLE_ENTROPY) < 1e-2
    assert abs(report.ecker_limit.limit - testdata.CIRCLE_ENTROPY) < 1e-2


def test_theorem1_on_the_grim_reaper():
    reaper = get_flow('grim_reaper')
    radii = [2.0**k for k in range(8)]
    report = verify_theorem1(reaper, radii=radii, cfg=testdata.strict_config(threads=4))
    assert report.verdict == 'PASS', report.to_json()
    assert abs(report.ecker_limit.limit - testdata.TWO_LINES) < 2e-2
    assert abs(report.huisken_limit.limit - testdata.TWO_LINES) < 2e-2
    assert report.ordering_holds, report.ordering
    assert report.ecker_monotone and report.huisken_monotone


def test_theorem1_on_the_angenent_oval():
    oval = get_flow('angenent_oval')
    report = verify_theorem1(oval, cfg=testdata.strict_config(threads=4))
    assert report.verdict == 'PASS', report.to_json()
    assert abs(report.ecker_limit.limit - testdata.TWO_LINES) < 5e-2
    assert abs(report.huisken_limit.limit - testdata.TWO_LINES) < 5e-2
    assert report.ordering_holds, report.ordering


def test_corollary_on_the_bowl():
    bowl = get_flow('bowl')
    report = verify_corollary32(bowl, cfg=testdata.strict_config(threads=4), starts=3)
    expected = testdata.CIRCLE_ENTROPY
    assert report.corollary == 'PASS', report.to_json()
    for estimate in (report.ecker_limit, report.huisken_limit, report.entropy_limit):
        assert abs(estimate.limit - expected) < 2e-2, f'{estimate} against {expected}'
    values = report.entropy.values()
    assert report.entropy.monotone, values


def test_huisken_derivative_is_the_deficit():
    reaper = get_flow('grim_reaper')
    cfg = testdata.strict_config()
    for t in -np.geomspace(0.25, 128.0, 10):
        h = 1e-2 * abs(t)
        forward = huisken_integral(reaper, t + h, cfg=cfg).value
        backward = huisken_integral(reaper, t - h, cfg=cfg).value
        rate = huisken_rate(reaper, t, cfg=cfg).value
        assert rate < 0
        assert abs((forward - backward) / (2 * h) - rate) < 1e-3 * abs(rate), f't={t}'


def test_ecker_derivative_is_the_deficit():
    reaper = get_flow('grim_reaper')
    cfg = testdata.strict_config(threads=4)
    for r in (2.0, 10.0):
        h = 1e-2 * r
        upper = ecker_ratio(reaper, HeatBall(r=r + h, n=1), cfg).value
        lower = ecker_ratio(reaper, HeatBall(r=r - h, n=1), cfg).value
        deficit = deficit_heatball(reaper, HeatBall(r=r, n=1), weighted=False, cfg=cfg).value
        expected = deficit / r**2
        assert abs((upper - lower) / (2 * h) - expected) < 1e-3 * expected, f'r={r}'


@pytest.mark.parametrize('name, r', [('grim_reaper', 5.0), ('angenent_oval', 5.0),
                                     ('grim_reaper', 20.0)])
def test_finite_radius_identity(name, r):
    flow = get_flow(name)
    report = residual_er35(flow, r, testdata.strict_config(threads=4))
    assert report.value < 5e-3, f'{name}: {report.details}'


def test_integrated_monotonicity_and_budget():
    oval = get_flow('angenent_oval')
    cfg = testdata.loose_config()
    check = verify_integrated_huisken(oval, -4.0, -1.0, cfg)
    assert check['lhs'] < 0 and check['relative'] < 1e-5, check
    budget = verify_deficit_budget(get_flow('grim_reaper'), -4.0, cfg)
    assert budget['relative'] < 1e-3, budget
    with pytest.raises(ValueError):
        verify_integrated_huisken(oval, -1.0, -4.0, cfg)


def test_limit_at_zero():
    cfg = testdata.strict_config(threads=4)
    plane = limit_at_zero(get_flow('plane'), cfg=cfg)
    assert abs(plane['values'][-1] - 1.0) < 5e-3
    oval = limit_at_zero(get_flow('angenent_oval'), cfg=cfg)
    assert abs(oval['density'] - testdata.CIRCLE_ENTROPY) < 5e-3
    assert abs(oval['values'][-1] - testdata.CIRCLE_ENTROPY) < 5e-3
    assert oval['decreasing']


def test_rescaling_identity():
    reaper = get_flow('grim_reaper')
    cfg = testdata.strict_config()
    scaled = get_flow('grim_reaper', rescale=2.0)
    direct = ecker_ratio(reaper, HeatBall(r=2.0, n=1), cfg).value
    rescaled = ecker_ratio(scaled, HeatBall(r=1.0, n=1), cfg).value
    assert abs(direct - rescaled) < 1e-6 * direct


@pytest.mark.parametrize('name, tau, theta', [('grim_reaper', -50.0, -1.0),
                                              ('angenent_oval', -50.0, -0.1)])
def test_integrated_monotonicity_over_long_intervals(name, tau, theta):
    flow = get_flow(name)
    check = verify_integrated_huisken(flow, tau, theta, testdata.strict_config(threads=4))
    assert check['lhs'] < 0, 'Huisken integral decreases forward in time'
    assert check['relative'] < 1e-4, f'{name} on [{tau}, {theta}]: {check}'
