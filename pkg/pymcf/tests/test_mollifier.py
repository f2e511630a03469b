'''
Tests of the mollifier family and the smoothed Ecker integral.
'''

import numpy as np
import pytest

from pymcf.flows import get_flow
from pymcf.mollifier import (PFLEM_GRID, MollifierSuite, make_mollifier, mollifier_suite,
                             monotonicity_table, pflem_identity_residual, sandwich_violations,
                             smoothed_ecker, smoothed_monotonicity_check, smoothed_ecker_limit,
                             smoothed_sandwich, error_term)
from pymcf.quad import QuadratureError, QuadResult
import pymcf.mollifier
import pymcf.tests.testdata as testdata


EPS = (0.5, 0.1, 0.02)


@pytest.mark.parametrize('eps', EPS)
def test_unit_mass(eps):
    fam = make_mollifier(eps)
    assert abs(fam.mass() - 1.0) < 1e-12, f'eta_{eps} has mass {fam.mass()}'
    assert fam.eta(-0.1 * eps) == 0.0 and fam.eta(1.1 * eps) == 0.0, 'eta lives on [0, eps]'


@pytest.mark.parametrize('eps', EPS)
def test_smoothed_heaviside_and_ramp(eps):
    fam = make_mollifier(eps)
    assert fam.zeta(0.0) == 0.0 and fam.zeta(eps) == 1.0
    assert fam.zeta(-1.0) == 0.0 and fam.zeta(3 * eps) == 1.0
    x = np.linspace(-eps, 2 * eps, 3001)
    assert np.all(np.diff(fam.zeta(x)) >= 0), 'zeta must be non-decreasing'
    assert 0 < fam.ramp_offset < eps
    assert fam.Z(5.0) == pytest.approx(5.0 - fam.ramp_offset, abs=1e-15)
    assert sandwich_violations(fam, samples=20000, seed=1) == 0


def test_alpha_is_negative_and_vanishes_with_eps():
    alphas = [make_mollifier(eps).alpha for eps in EPS]
    assert all(a < 0 for a in alphas), f'alpha must be negative: {alphas}'
    assert alphas[0] < alphas[1] < alphas[2], 'alpha should increase to 0 as eps -> 0'
    # eta_eps has mean eps / 2
    assert abs(alphas[2] + 0.01) < 1e-4


def test_exponential_moment():
    fam = make_mollifier(0.1)
    assert fam.K(-1.0) == 0.0
    assert abs(fam.K(50.0) - np.exp(fam.alpha)) < 1e-7, 'K(inf) = int e^-y eta(y) dy'
    y = np.linspace(0, 1, 101)
    assert np.all(np.diff(fam.K(y)) >= 0)


@pytest.mark.parametrize('eps', [0.5, 0.1])
@pytest.mark.parametrize('n', [1, 2])
def test_kernel_identity(eps, n):
    '''int_0^inf n / r^(n+1) zeta_eps(psi_r) dr = e^alpha Phi'''
    fam = make_mollifier(eps)
    samples = [(np.full(n + 1, x), t) for x, t in PFLEM_GRID]
    residual = pflem_identity_residual(fam, samples, n)
    assert residual < 1e-6, f'kernel identity residual {residual} for eps={eps}, n={n}'
    with pytest.raises(ValueError):
        pflem_identity_residual(fam, [(np.zeros(2), 0.0)], n)


def test_make_mollifier_needs_positive_width():
    with pytest.raises(ValueError):
        make_mollifier(0.0)
    with pytest.raises(ValueError):
        smoothed_ecker(get_flow('circle'), 1.0)


def test_mollifier_suite():
    suite = mollifier_suite((0.5, 0.1), samples=1000)
    assert list(suite.columns) == ['eps', 'alpha', 'mass', 'pflem_residual', 'sandwich_violations']
    assert len(suite) == 2
    assert suite['sandwich_violations'].sum() == 0
    assert (suite['pflem_residual'] < 1e-6).all()


def test_smoothed_sandwich_on_the_circle():
    circle = get_flow('circle')
    terms = smoothed_sandwich(circle, 2.0, make_mollifier(0.1), testdata.loose_config())
    assert terms['holds'], f'sandwich broken: {terms}'
    assert abs(terms['upper'] - testdata.CIRCLE_ENTROPY) < 1e-5
    # e^-eps from the bound, e^-eps from the smaller radius
    assert abs(terms['lower'] - np.exp(-0.2) * testdata.CIRCLE_ENTROPY) < 1e-5


def test_smoothed_monotonicity_on_the_circle():
    '''No deficit on a self-shrinker: the smoothed ratio does not depend on r'''
    circle = get_flow('circle')
    check = smoothed_monotonicity_check(circle, 1.0, 2.0, make_mollifier(0.1),
                                        testdata.loose_config())
    assert abs(check['lhs']) < 1e-5 and abs(check['rhs']) < 1e-8, f'{check}'


def test_error_term_arguments():
    circle = get_flow('circle')
    fam = make_mollifier(0.1)
    with pytest.raises(ValueError):
        error_term(circle, -1.0, 2.0, 1.0, fam)
    with pytest.raises(ValueError):
        error_term(circle, 0.0, 1.0, 2.0, fam)
    assert error_term(circle, -1.0, 0.5, 1.0, fam) == 0.0, 'these heat-balls end before s'


def test_error_term_on_the_grim_reaper():
    '''E(s; 1, 4) with eps = 0.1 rises to a peak near s = -1e-2 and then decays to 0 as s -> 0'''
    reaper = get_flow('grim_reaper')
    fam = make_mollifier(0.1)
    cfg = testdata.loose_config()
    values = [error_term(reaper, s, 1.0, 4.0, fam, cfg) for s in (-1e-1, -1e-2, -1e-3, -1e-4)]
    np.testing.assert_allclose(values, [0.2046, 0.3871, 0.2792, 0.1503], atol=2e-3)
    assert values[1] > values[0], f'error term should peak after s = -1e-1: {values}'
    assert values[3] < values[2] < values[1], f'error term should decay as s -> 0: {values}'


def test_error_term_carries_inner_errors(monkeypatch):
    '''Slice integrals with wide error bars make the r-integral fail instead of passing silently'''
    def fake_slice(flow, t, integrand, restriction=None, cfg=None):
        return QuadResult(value=1.0, error_estimate=0.1, converged=False)

    monkeypatch.setattr(pymcf.mollifier, 'integrate_slice', fake_slice)
    with pytest.raises(QuadratureError):
        error_term(get_flow('grim_reaper'), -1e-2, 1.0, 4.0, make_mollifier(0.1),
                   testdata.loose_config())


def test_smoothed_ecker_truncation_limit():
    '''A_eps(s, r) -> A_eps(r) as s -> 0'''
    reaper = get_flow('grim_reaper')
    fam = make_mollifier(0.1)
    cfg = testdata.loose_config()
    full = smoothed_ecker(reaper, 2.0, None, fam, cfg).value
    estimate, series = smoothed_ecker_limit(reaper, 2.0, fam, cfg)
    assert list(series.columns) == ['s', 'value']
    assert np.all(np.diff(series['value']) >= -1e-9), 'truncated integrals grow with s'
    assert series['value'].iloc[-1] <= full + 1e-9
    assert abs(estimate.limit - full) < 10 * estimate.error + 1e-6, f'{estimate} against {full}'


def test_smoothed_ecker_recovers_ecker_as_eps_shrinks():
    '''A_eps(r) / r^n increases to A(E_r) / r^n as eps -> 0, inside the sandwich for every eps'''
    reaper = get_flow('grim_reaper')
    cfg = testdata.loose_config()
    terms = [smoothed_sandwich(reaper, 5.0, make_mollifier(eps), cfg) for eps in (0.4, 0.2, 0.1)]
    assert all(term['holds'] for term in terms), terms
    middles = [term['middle'] for term in terms]
    gaps = [term['upper'] - term['middle'] for term in terms]
    assert np.all(np.diff(middles) > 0), f'smoothed integrals should grow as eps shrinks: {middles}'
    assert gaps[-1] < gaps[0] / 2, f'gap to the Ecker ratio should close with eps: {gaps}'


def test_smoothed_monotonicity_on_the_grim_reaper():
    reaper = get_flow('grim_reaper')
    check = smoothed_monotonicity_check(reaper, 2.0, 8.0, make_mollifier(0.1),
                                        testdata.loose_config())
    assert check['lhs'] > 0, 'the smoothed ratio grows with r on a non-shrinker'
    assert check['relative'] < 1e-2, f'{check}'


def test_monotonicity_table_and_step():
    circle = get_flow('circle')
    cfg = testdata.loose_config()
    table = monotonicity_table(circle, (0.5,), 1.0, 2.0, cfg)
    assert list(table.columns) == ['eps', 'sigma', 'rho', 'lhs', 'rhs', 'residual', 'relative',
                                   'error', 'holds']
    assert table['holds'].all(), 'no deficit: both sides vanish within the noise floor'

    data = dict(flow=circle, cfg=cfg, seed=0, series=dict(), results=dict())
    data = MollifierSuite(eps=[0.5], samples=100, radii=[1.0, 2.0])(data)
    assert set(data['series']) == {'mollifier', 'monotonicity'}
    assert data['series']['monotonicity']['holds'].all()

    data = dict(flow=circle, cfg=cfg, seed=0, series=dict(), results=dict())
    data = MollifierSuite(eps=[0.5], samples=100, radii=[])(data)
    assert set(data['series']) == {'mollifier'}

    with pytest.raises(ValueError):
        MollifierSuite(radii=[4.0, 1.0])
    with pytest.raises(ValueError):
        MollifierSuite(eps=[0.0])


def test_monotonicity_table_flags_large_residuals(monkeypatch):
    def off_by_half(flow, sigma, rho, fam, cfg=None):
        return dict(lhs=1.0, rhs=0.5, residual=0.5, relative=0.5, error=1e-8)

    monkeypatch.setattr(pymcf.mollifier, 'smoothed_monotonicity_check', off_by_half)
    table = monotonicity_table(get_flow('circle'), (0.5, 0.1), 1.0, 4.0)
    assert not table['holds'].any()
