import math
import warnings

import numpy as np
import pytest

from blowfly.charspec import WaveSpec, min_speed, wave_spec
from blowfly.errors import ConfigError, PreconditionError
from blowfly.lindelay import (
    SpectralField,
    closed_form_spot_check,
    evolve_spectral,
    measure_linear_decay,
    mode_coefficients,
    wavenumbers,
)
from blowfly.model import ModelParams
from blowfly.pde import Grid1D, coefficients, evolve_comparison
from blowfly.stability import compact_bump

MP = ModelParams(p=math.exp(2.0))


@pytest.fixture(scope="module")
def crit():
    return wave_spec(MP, "critical")


@pytest.fixture(scope="module")
def fast():
    return wave_spec(MP, 1.2 * min_speed(MP)[0])


def test_symbols(crit, fast):
    eta = np.linspace(0, 5, 11)
    for ws in (crit, fast):
        a0, a1, k2 = coefficients(ws, MP)
        s = mode_coefficients(ws, MP, eta)
        assert s.A[0] == pytest.approx(a1)
        assert s.B[0] == pytest.approx(k2)
        assert np.allclose(np.abs(s.B), k2)
        assert np.allclose(s.A.real, MP.D * eta**2 + a1)
        assert np.allclose(s.A.imag, a0 * eta)
        assert np.allclose(s.B_bar, s.B * np.exp(s.A * MP.r))
    a0, a1, k2 = coefficients(crit, MP)
    assert a1 == pytest.approx(k2, rel=1e-10)


def test_symbols_reject_unbalanced_pairs(crit):
    with pytest.raises(PreconditionError):
        mode_coefficients(WaveSpec(crit.c, 1.1 * crit.lam, True), MP, [0.0])
    # lambda outside (lambda1, lambda2): the zero mode would grow
    with pytest.raises(PreconditionError):
        mode_coefficients(WaveSpec(crit.c, crit.lam, False), MP.replace(p=math.exp(2.2)), [0.0])


def test_wavenumbers_match_box():
    g = Grid1D(10.0, 64)
    eta = wavenumbers(g)
    assert eta.size == 33
    assert eta[1] == pytest.approx(2 * np.pi / (g.n * g.dx))


def test_spectral_field_requires_power_of_two():
    with pytest.raises(ConfigError):
        SpectralField(Grid1D(5.0, 100), np.zeros(51, dtype=complex))
    g = Grid1D(5.0, 128)
    u = np.sin(g.xi)
    assert np.allclose(SpectralField.from_values(g, u).values(), u)


def test_negligible_delay_term_gives_drifting_gaussian():
    # p so small that the delayed term is zero in double precision
    mp = ModelParams(p=1e-300, D=0.8, delta=1.0, r=0.5)
    ws = WaveSpec(c=1.0, lam=0.5, critical=False)
    a0, a1, _ = coefficients(ws, mp)
    g = Grid1D(30.0, 512)
    s2 = 1.5
    u0 = np.exp(-g.xi**2 / (2 * s2))
    t = 2.0
    res = evolve_spectral(g, u0, ws, mp, t)
    var = s2 + 2 * mp.D * t
    exact = math.exp(-a1 * t) * math.sqrt(s2 / var) * np.exp(-(g.xi - a0 * t) ** 2 / (2 * var))
    assert np.max(np.abs(res.final.values() - exact)) < 1e-10


@pytest.mark.parametrize("which", ["crit", "fast"])
def test_modes_match_delayed_exponential_formula(which, request):
    ws = request.getfixturevalue(which)
    err = closed_form_spot_check(ws, MP, [0.0, 0.3, 1.0], [0.5, 1.7, 3.0], dt=1e-3)
    assert err < 1e-8


def test_zero_mode_is_neutral_at_critical_speed(crit):
    g = Grid1D(20.0, 256)
    with pytest.warns(RuntimeWarning, match="box edge"):
        res = evolve_spectral(g, np.ones(g.n), crit, MP, 3.0)
    assert res.final.modes[0].real == pytest.approx(g.n, rel=1e-9)


def test_linearity(fast):
    g = Grid1D(20.0, 256)
    h1 = compact_bump(g.xi, -3.0, 4.0)
    h2 = compact_bump(g.xi, 2.0, 3.0)
    u1 = evolve_spectral(g, h1, fast, MP, 2.0).final.values()
    u2 = evolve_spectral(g, h2, fast, MP, 2.0).final.values()
    u12 = evolve_spectral(g, h1 + 2 * h2, fast, MP, 2.0).final.values()
    assert np.max(np.abs(u12 - u1 - 2 * u2)) < 1e-12


def test_history_callable_equals_array_for_constant_history(fast):
    g = Grid1D(20.0, 256)
    h = compact_bump(g.xi, 0.0, 4.0)
    a = evolve_spectral(g, h, fast, MP, 1.5).final.values()
    b = evolve_spectral(g, lambda s, xi: compact_bump(xi, 0.0, 4.0), fast, MP, 1.5).final.values()
    assert np.array_equal(a, b)


def test_smooth_nonnegative_data_stays_nonnegative(crit):
    g = Grid1D(30.0, 512)
    u0 = np.exp(-g.xi**2 / 4)
    res = evolve_spectral(g, u0, crit, MP, 4.0, snapshot_every=100)
    assert res.snapshots.min() >= -1e-10 * res.snapshots.max()


def test_spectral_and_finite_difference_agree_to_second_order(crit):
    gaps = []
    for n in (256, 512):
        g = Grid1D(20.0, n)
        u0 = np.exp(-g.xi**2 / 2)
        spec = evolve_spectral(g, u0, crit, MP, 2.0).final.values()
        fd, _ = evolve_comparison(crit, MP, u0, g, t_end=2.0)
        gaps.append(np.max(np.abs(spec - fd.u)))
    assert gaps[1] < 1e-3
    assert 3.3 < gaps[0] / gaps[1] < 4.7


def test_warns_when_field_reaches_the_box_edge(fast):
    g = Grid1D(5.0, 64)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        res = evolve_spectral(g, np.ones(g.n), fast, MP, 0.5)
    assert "edge" in res.warnings
    assert any("box edge" in str(w.message) for w in rec)


def test_rejects_zero_delay(crit):
    with pytest.raises(ConfigError):
        evolve_spectral(Grid1D(5.0, 64), np.zeros(64), crit, MP.replace(r=0.0), 1.0)


# ------------------------------------------------------------------ decay measurement


def test_measure_decay_noncritical_recovers_rate(fast):
    t = np.linspace(0, 40, 401)
    mu = 0.37
    sup = 0.2 * (1 + t) ** -0.5 * np.exp(-mu * t)
    rep = measure_linear_decay(t, sup, fast, MP)
    assert rep.fit.exp_rate == pytest.approx(mu, rel=1e-9)
    assert rep.decaying and rep.passed
    assert rep.ratio == pytest.approx(mu / rep.mu0)


def test_measure_decay_critical_heat_like(crit):
    t = np.linspace(0, 60, 601)
    rep = measure_linear_decay(t, 3 * (1 + t) ** -0.5, crit, MP)
    assert rep.fit.alg_exponent == pytest.approx(-0.5, abs=1e-9)
    assert rep.passed
    rep = measure_linear_decay(t, 3 * (1 + t) ** -1.5, crit, MP)
    assert rep.decaying and not rep.passed


def test_growth_is_reported_not_raised(fast):
    t = np.linspace(0, 20, 201)
    rep = measure_linear_decay(t, (1 + t) ** -0.5 * np.exp(0.1 * t), fast, MP)
    assert not rep.decaying and not rep.passed
