import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from blowfly.charspec import (
    Shape,
    classify_regime,
    delay_thresholds,
    gap,
    gap_prime,
    lambda_pair,
    min_speed,
    mu0,
    mu_bound,
    r0_intersection,
    r_bar,
    r_under,
    spectral_profile,
    upper_residual,
    upper_root,
    upper_speed,
    wave_spec,
    weight,
)
from blowfly.errors import PreconditionError, RegimeError
from blowfly.model import ModelParams, birth_prime, equilibria


def tangency_oracle(mp, guess):
    """(c*, lam*) from mpmath's multidimensional root finder at 40 digits."""
    mpmath.mp.dps = 40
    D, dl, p, r = (mpmath.mpf(x) for x in (mp.D, mp.delta, mp.p, mp.r))

    def f(c, lam):
        e = mpmath.exp(-lam * c * r)
        return [c * lam - D * lam**2 + dl - p * e, c - 2 * D * lam + c * r * p * e]

    c, lam = mpmath.findroot(f, guess)
    return float(c), float(lam)


def bisect(f, lo, hi, n=200):
    flo = f(lo)
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("D, delta, p, c, lam", [(1, 1, 2, 2, 1), (2, 1, 3, 4, 1)])
def test_min_speed_undelayed_examples(D, delta, p, c, lam):
    cs, ls = min_speed(ModelParams(D=D, delta=delta, p=p, r=0.0))
    assert cs == pytest.approx(c, rel=1e-14)
    assert ls == pytest.approx(lam, rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(D=st.floats(0.1, 10), delta=st.floats(0.1, 10), excess=st.floats(0.01, 50))
def test_min_speed_undelayed_closed_form(D, delta, excess):
    p = delta + excess
    cs, ls = min_speed(ModelParams(D=D, delta=delta, p=p, r=0.0))
    assert cs == pytest.approx(2 * math.sqrt(D * (p - delta)), rel=1e-10)
    assert ls == pytest.approx(math.sqrt((p - delta) / D), rel=1e-10)


def test_min_speed_default_is_sqrt2(mp_e2):
    cs, ls = min_speed(mp_e2)
    assert cs == pytest.approx(math.sqrt(2), rel=1e-12)
    assert ls == pytest.approx(math.sqrt(2), rel=1e-12)
    assert cs < 2 * math.sqrt(math.e**2 - 1)


@settings(max_examples=25, deadline=None)
@given(D=st.floats(0.2, 5), delta=st.floats(0.2, 5), q=st.floats(1.5, 60), r=st.floats(0.0, 3))
def test_tangency_residuals(D, delta, q, r):
    mp = ModelParams(D=D, delta=delta, p=q * delta, r=r)
    cs, ls = min_speed(mp)
    scale = mp.delta + mp.p
    assert abs(gap(ls, cs, mp)) <= 1e-8 * scale
    assert abs(gap_prime(ls, cs, mp)) <= 1e-8 * max(cs, 1.0)
    # g(lam) <= 0 everywhere at the critical speed (tangency from below)
    lam = np.linspace(0, 3 * ls, 400)
    assert np.all(gap(lam, cs, mp) <= 1e-8 * scale)


@pytest.mark.parametrize("p, r", [(math.exp(2), 1.0), (math.exp(3), 0.5), (5.0, 2.0), (20.0, 0.1)])
def test_min_speed_matches_mpmath(p, r):
    mp = ModelParams(p=p, r=r)
    cs, ls = min_speed(mp)
    oc, ol = tangency_oracle(mp, (cs * 1.01, ls * 0.99))
    assert cs == pytest.approx(oc, rel=1e-12)
    assert ls == pytest.approx(ol, rel=1e-12)


def test_min_speed_decreases_with_delay(mp_e2):
    speeds = [min_speed(mp_e2.replace(r=r))[0] for r in np.linspace(0, 3, 13)]
    assert np.all(np.diff(speeds) < 0)


def test_lambda_pair_quadratic():
    mp = ModelParams(p=2.0, r=0.0)
    l1, l2 = lambda_pair(mp, 3.0)
    assert l1 == pytest.approx((3 - math.sqrt(5)) / 2, rel=1e-12)
    assert l2 == pytest.approx((3 + math.sqrt(5)) / 2, rel=1e-12)


def test_lambda_pair_merges_at_tangency():
    mp = ModelParams(p=2.0, r=0.0)
    l1, l2 = lambda_pair(mp, 2.0 + 1e-8)
    assert abs(l1 - 1) < 1e-3 and abs(l2 - 1) < 1e-3


def test_lambda_pair_delayed():
    mp = ModelParams(p=math.exp(2), r=0.5)
    cs, ls = min_speed(mp)
    c = 1.2 * cs
    l1, l2 = lambda_pair(mp, c)
    assert 0 < l1 < ls < l2
    for lam in (l1, l2):
        assert abs(gap(lam, c, mp)) < 1e-12 * (mp.p + mp.delta)
    # independent sign-change bisection
    f = lambda x: gap(x, c, mp)  # noqa: E731
    assert l1 == pytest.approx(bisect(f, 0.0, ls), rel=1e-12)
    assert l2 == pytest.approx(bisect(f, ls, 50.0), rel=1e-12)
    lam = np.linspace(l1, l2, 102)[1:-1]
    assert np.all(gap(lam, c, mp) > 0)


def test_lambda_pair_rejects_subcritical(mp_e2):
    with pytest.raises(PreconditionError):
        lambda_pair(mp_e2, math.sqrt(2))


@settings(max_examples=20, deadline=None)
@given(q=st.floats(2.0, 40), r=st.floats(0, 2), f=st.floats(1.01, 2.0))
def test_lambda_pair_ordering(q, r, f):
    mp = ModelParams(p=q, r=r)
    cs, ls = min_speed(mp)
    l1, l2 = lambda_pair(mp, f * cs)
    assert 0 < l1 < ls < l2
    lam = np.linspace(l1, l2, 102)[1:-1]
    assert np.all(gap(lam, f * cs, mp) > 0)


def test_r_under_lambert():
    ru = r_under(ModelParams(p=math.exp(2)))
    assert ru == pytest.approx(float(np.real(lambertw(1 / math.e))), rel=1e-13)
    assert ru == pytest.approx(0.278465, abs=1e-6)


@pytest.mark.parametrize("delta, q", [(1.0, math.exp(2)), (1.0, math.exp(3)), (2.0, 4.0),
                                      (0.5, 30.0)])
def test_r_under_bisection_oracle(delta, q):
    mp = ModelParams(delta=delta, p=q * delta)
    beta = delta * (math.log(q) - 1)
    oracle = bisect(lambda r: beta * r * math.exp(delta * r + 1) - 1, 0.0, 10.0)
    assert r_under(mp) == pytest.approx(oracle, rel=1e-10)


def test_r_under_absent_out_of_scope():
    assert r_under(ModelParams(p=2.0)) is None


def test_r_bar_closed_forms():
    assert r_bar(ModelParams(p=math.exp(3))) == pytest.approx(2 * math.pi / (3 * math.sqrt(3)),
                                                             rel=1e-12)
    assert r_bar(ModelParams(delta=2.0, p=2 * math.exp(3))) == pytest.approx(
        math.pi / (3 * math.sqrt(3)), rel=1e-12)
    assert r_bar(ModelParams(p=math.exp(2))) == math.inf
    assert r_bar(ModelParams(p=math.exp(1.5))) == math.inf


@settings(max_examples=30, deadline=None)
@given(delta=st.floats(0.2, 5), L=st.floats(2.05, 6))
def test_threshold_ordering(delta, L):
    ru, rb = delay_thresholds(ModelParams(delta=delta, p=delta * math.exp(L)))
    assert 0 < ru < rb < math.inf


def test_r_bar_is_hopf_point():
    """At r_bar the linearisation at v_plus has a purely imaginary root i w."""
    mp = ModelParams(p=math.exp(3))
    rb = r_bar(mp)
    bp = float(birth_prime(equilibria(mp).v_plus, mp))
    w = math.sqrt(bp**2 - mp.delta**2)
    z = 1j * w
    assert abs(z + mp.delta - bp * np.exp(-z * rb)) < 1e-12


def test_upper_root_undelayed_quadratic():
    mp = ModelParams(p=math.exp(1.5), r=0.0)
    bp = mp.delta * (1 - 1.5)
    c = 1.7
    lam = upper_root(mp, c)
    assert lam == pytest.approx((-c + math.sqrt(c * c + 4 * (mp.delta - bp))) / 2, rel=1e-13)


def test_upper_root_degenerate_boundary():
    mp = ModelParams(p=math.e, r=0.7)
    c = 1.3
    assert upper_root(mp, c) == pytest.approx((-c + math.sqrt(c * c + 4)) / 2, rel=1e-13)


def test_upper_root_residual_below_r_under():
    mp = ModelParams(p=math.exp(1.5), r=0.3)
    assert mp.r < r_under(mp)
    bp = float(birth_prime(equilibria(mp).v_plus, mp))
    for c in (0.5, 1.0, 2.0, 5.0):
        lam = upper_root(mp, c)
        assert lam > 0
        assert abs(upper_residual(mp, c, lam, bp)[0]) < 1e-10
    assert upper_speed(mp)[0] == math.inf


def test_upper_speed_residual_and_oracle():
    mp = ModelParams(p=math.exp(1.5), r=0.7)
    cu, lu = upper_speed(mp)
    h1, h2 = upper_residual(mp, cu, lu)
    assert abs(h1) < 1e-10 and abs(h2) < 1e-10
    assert lu > 0
    bp = float(birth_prime(equilibria(mp).v_plus, mp))
    mpmath.mp.dps = 40

    def f(c, lam):
        e = mpmath.exp(lam * c * mp.r)
        return [-c * lam - lam**2 + 1 - bp * e, -c - 2 * lam - bp * c * mp.r * e]

    oc, ol = mpmath.findroot(f, (cu * 1.01, lu * 1.01))
    assert cu == pytest.approx(float(oc), rel=1e-10)
    assert lu == pytest.approx(float(ol), rel=1e-10)
    # slower waves still have a real root, faster ones do not
    assert upper_root(mp, 0.99 * cu) is not None
    assert upper_root(mp, 1.01 * cu) is None


def test_upper_speed_infinite_below_r_under(mp_e2):
    cu, lu = upper_speed(mp_e2.replace(r=0.2))
    assert cu == math.inf and math.isnan(lu)


def test_r0_intersection(mp_e2):
    r0 = r0_intersection(mp_e2)
    assert r0 == pytest.approx(0.49912, abs=1e-5)
    for r, sign in ((r0 - 1e-3, 1), (r0 + 1e-3, -1)):
        m = mp_e2.replace(r=r)
        assert sign * (upper_speed(m)[0] - min_speed(m)[0]) > 0
    assert r0_intersection(ModelParams(p=math.exp(3))) is None


def test_spectral_profile_row(mp_e2):
    sp = spectral_profile(mp_e2)
    row = sp.as_row()
    assert list(row) == ["c_star", "lambda_star", "r_under", "r_bar", "c_upper", "lambda_upper",
                         "r0", "regime"]
    assert row["r_bar"] == math.inf
    with pytest.raises(RegimeError):
        spectral_profile(ModelParams(p=2.0))


@pytest.mark.parametrize(
    "p, r, factor, shape",
    [
        (math.exp(3), 2.0, 1.0, Shape.NOWAVE),
        (math.exp(2), 0.1, 1.0, Shape.MONOTONE),
        (math.exp(2), 0.1, 3.0, Shape.MONOTONE),
        (math.exp(3), 1.0, 1.0, Shape.OSCILLATORY),
        (math.exp(3), 0.1, 1.1, Shape.MONOTONE),
        (math.exp(2), 0.4, 1.2, Shape.MONOTONE),
        (math.exp(2), 0.4, 1.5, Shape.OSCILLATORY),
        (math.exp(2), 1.0, 1.0, Shape.OSCILLATORY),
    ],
)
def test_classify_regime(p, r, factor, shape):
    mp = ModelParams(p=p, r=r)
    c = factor * min_speed(mp)[0]
    assert classify_regime(mp, c) is shape
    assert classify_regime(mp, c) is shape


def test_classify_regime_errors(mp_e2):
    with pytest.raises(RegimeError):
        classify_regime(ModelParams(p=2.0), 3.0)
    with pytest.raises(PreconditionError):
        classify_regime(mp_e2, 1.0)


def test_wave_spec(mp_e2):
    ws = wave_spec(mp_e2)
    assert ws.critical and ws.lam == pytest.approx(math.sqrt(2))
    ws = wave_spec(mp_e2, 1.2 * math.sqrt(2))
    l1, l2 = lambda_pair(mp_e2, ws.c)
    assert not ws.critical and ws.lam == pytest.approx(0.5 * (l1 + l2))
    assert gap(ws.lam, ws.c, mp_e2) > 0
    with pytest.raises(PreconditionError):
        wave_spec(mp_e2, 1.0)
    with pytest.raises(PreconditionError):
        wave_spec(mp_e2, 2.0, lam=10.0)


@settings(max_examples=20, deadline=None)
@given(f=st.floats(1.01, 3.0), t=st.floats(0.01, 0.99))
def test_mu_bound_positive_inside_pair(f, t):
    mp = ModelParams(p=math.exp(2), r=1.0)
    c = f * math.sqrt(2)
    l1, l2 = lambda_pair(mp, c)
    ws = wave_spec(mp, c, lam=l1 + t * (l2 - l1))
    assert mu0(ws, mp) > 0
    assert 0 < mu_bound(ws, mp) <= mp.delta


def test_weight_examples(mp_e2):
    ws = wave_spec(mp_e2)
    w0, flag = weight(ws, 0.0)
    assert w0 == 1.0 and not flag
    xi = np.linspace(-5, 5, 11)
    assert np.allclose(weight(ws, xi)[0] * weight(ws, -xi)[0], 1.0, rtol=1e-14)
    one = type(ws)(c=ws.c, lam=1.0, critical=False)
    assert weight(one, math.log(2))[0] == pytest.approx(0.25, rel=1e-15)
    w, flag = weight(ws, np.array([-1e4, 0.0]))
    assert flag and np.isfinite(w).all()
    assert np.all(np.diff(weight(ws, xi)[0]) < 0)
