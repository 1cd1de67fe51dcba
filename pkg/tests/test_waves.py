import math

import numpy as np
import pytest

from blowfly.charspec import Shape, classify_regime, lambda_pair, min_speed, wave_spec
from blowfly.errors import PreconditionError, RegimeError
from blowfly.model import ModelParams, equilibria
from blowfly.pde import Grid1D, evolve_perturbation
from blowfly.waves import (
    WaveProfile,
    classify_profile,
    compute_profile,
    count_crossings,
    critical_profile,
    profile_residual,
    tail_slope,
)

E2, E3 = math.exp(2.0), math.exp(3.0)


def _profile(p, r, factor, L=40.0, n=1024):
    mp = ModelParams(p=p, r=r)
    ws = wave_spec(mp, "critical") if factor == 1 else wave_spec(mp, factor * min_speed(mp)[0])
    grid = Grid1D.snapped(L, n, ws.c * r)
    return mp, ws, compute_profile(ws, mp, grid)


CASES = [
    (E2, 0.0, 1.0),
    (E2, 0.15, 1.0),
    (E2, 1.0, 1.0),
    (E2, 1.0, 1.2),
    (E3, 0.1, 1.0),
    (E3, 1.0, 1.0),
    (E3, 0.5, 1.3),
]


@pytest.mark.parametrize("p,r,factor", CASES)
def test_profile_solves_the_discrete_equation(p, r, factor):
    mp, ws, wp = _profile(p, r, factor)
    vp = equilibria(mp).v_plus
    assert wp.residual <= 1e-9
    assert profile_residual(wp, mp) == pytest.approx(wp.residual, abs=1e-15)
    assert wp.phi[-1] == pytest.approx(vp, abs=1e-12)
    assert np.interp(0.0, wp.xi, wp.phi) == pytest.approx(vp / 2, abs=1e-9)
    assert np.all(wp.phi > -1e-12)


@pytest.mark.parametrize("p,r,factor", CASES)
def test_profile_shape_matches_theory(p, r, factor):
    mp, ws, wp = _profile(p, r, factor)
    assert classify_profile(wp) is classify_regime(mp, ws.c)


def test_instantaneous_profile_is_monotone():
    mp, _, wp = _profile(E2, 0.0, 1.0)
    assert np.all(np.diff(wp.phi) >= -1e-10)
    assert wp.crossings == 0


@pytest.mark.parametrize("factor", [1.0, 1.3])
def test_left_tail_decays_at_the_leading_rate(factor):
    mp, ws, wp = _profile(E2, 0.5, factor, L=60.0, n=2048)
    expected = ws.lam if ws.critical else lambda_pair(mp, ws.c)[0]
    # the critical tail carries an extra linear factor, worth about 1/(0.75 L)
    assert tail_slope(wp) == pytest.approx(expected, rel=0.05)


def test_profile_converges_under_refinement():
    mp = ModelParams(p=E2, r=0.5)
    ws = wave_spec(mp, "critical")
    base = Grid1D.snapped(30.0, 301, ws.c * mp.r)
    sols = []
    for k in (1, 2, 4):
        g = Grid1D(base.L, (base.n - 1) * k + 1)
        sols.append(compute_profile(ws, mp, g).phi[::k])
    ratio = np.max(np.abs(sols[0] - sols[1])) / np.max(np.abs(sols[1] - sols[2]))
    assert 3.5 < ratio < 4.5


@pytest.mark.parametrize("factor", [1.0, 1.2])
def test_profile_is_a_steady_state_of_the_evolution(factor):
    mp, ws, wp = _profile(E2, 1.0, factor, L=30.0, n=601)
    f, _ = evolve_perturbation(ws, mp, wp.phi, np.zeros(wp.grid.n), wp.grid, t_end=3.0)
    # the drift is driven by the profile residual alone
    assert np.max(np.abs(f.u)) <= 3.0 * 10 * max(wp.residual, 1e-12)


def test_no_profile_outside_existence():
    with pytest.raises(RegimeError):
        critical_profile(ModelParams(p=2.0), Grid1D(20.0, 201))
    mp = ModelParams(p=E3, r=1.5)
    with pytest.raises(RegimeError):
        critical_profile(mp, Grid1D(20.0, 201))
    with pytest.raises(PreconditionError):
        wave_spec(ModelParams(p=E2), 0.5)


# ------------------------------------------------------------------ classification of given data


def _synthetic(phi, L=20.0):
    g = Grid1D(L, phi.size)
    return WaveProfile(g, phi, 1.0, 0.0, 0, 1.0)


def test_classify_tanh_is_monotone():
    x = np.linspace(-20, 20, 801)
    wp = _synthetic(1 + np.tanh(x))
    assert classify_profile(wp, 2.0) is Shape.MONOTONE
    assert count_crossings(wp.grid, wp.phi, 2.0) == 0


def test_classify_ringing_is_oscillatory():
    x = np.linspace(-20, 20, 801)
    ring = np.where(x > 0, 0.3 * np.exp(-0.2 * x) * np.sin(1.5 * x), 0.0)
    wp = _synthetic(1 + np.tanh(x) + ring)
    assert classify_profile(wp, 2.0) is Shape.OSCILLATORY
    assert count_crossings(wp.grid, wp.phi, 2.0) >= 2


def test_ringing_below_the_noise_floor_is_ignored():
    x = np.linspace(-20, 20, 801)
    noise = np.where(x > 5, 1e-9 * np.sin(3 * x), 0.0)
    wp = _synthetic(1 + np.tanh(x) + noise)
    assert classify_profile(wp, 2.0) is Shape.MONOTONE


def test_single_crossing_is_ambiguous():
    x = np.linspace(-20, 20, 801)
    # approaches from below near the middle, then settles from above
    slow = np.where(x > 0, 0.01 * x * np.exp(-0.3 * x), 0.0)
    wp = _synthetic(1 + np.tanh(x) + slow)
    assert count_crossings(wp.grid, wp.phi, 2.0) == 1
    assert classify_profile(wp, 2.0) is Shape.AMBIGUOUS


def test_non_monotone_without_crossings_is_ambiguous():
    x = np.linspace(-20, 20, 801)
    dip = -0.05 * np.exp(-((x + 4) ** 2))
    wp = _synthetic(1 + np.tanh(x) + dip)
    assert classify_profile(wp, 2.0) is Shape.AMBIGUOUS
