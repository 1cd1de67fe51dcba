"""Perturbations of traveling fronts: evolution, decay-rate fits and zone diagnostics.

A run computes the front profile, builds an admissible perturbation u0 and
evolves three fields in lockstep from matched data:

* u, the perturbation itself,
* ut = exp(-lam xi) u, the anti-weighted perturbation,
* u+, the linear comparison solution started from |ut0|,

recording the sup norms that the decay fits and the boundedness check use.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .charspec import WaveSpec, mu0, mu_bound
from .errors import ConfigError, FitError
from .fitting import RateFit, fit_decay
from .model import ModelParams, equilibria
from .pde import (
    BoundednessMonitor,
    DelayBoundMonitor,
    Grid1D,
    NegativityMonitor,
    antiweight,
    antiweighted_field,
    coefficients,
    comparison_field,
    march,
    perturbation_field,
)
from .waves import WaveProfile, compute_profile

PERTURBATIONS = ("bump", "shift", "packet", "large", "random")
SERIES_COLUMNS = ("t", "sup_u", "sup_u_near", "sup_u_far", "sup_utilde", "sup_uplus")
X0_BAND = 0.05


@dataclass(frozen=True)
class ExperimentSpec:
    """One stability experiment. ``x0`` None selects it from the profile."""

    mp: ModelParams
    ws: WaveSpec
    grid: Grid1D
    perturbation: str = "bump"
    amplitude: float = 0.1
    center: float = 0.0
    width: float = 5.0
    t_end: float = 200.0
    dt: float | None = None
    x0: float | None = None
    record_dt: float = 0.25
    fit_window: tuple | None = None
    cutoff_at: float = -10.0
    cutoff_scale: float = 5.0
    coupled: bool = True
    scheme: str = "central"
    seed: int = 0

    def __post_init__(self):
        if self.perturbation not in PERTURBATIONS:
            raise ConfigError(f"unknown perturbation {self.perturbation!r}")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not self.width > 0 or not self.cutoff_scale > 0:
            raise ConfigError("widths must be positive")

    def window(self):
        if self.fit_window is not None:
            return tuple(self.fit_window)
        return (max(10 * self.mp.r, 20.0), self.t_end)


def compact_bump(xi, center, width):
    """C-infinity bump exp(1 - 1/(1 - s^2)) on |s| < 1, s = (xi - center)/width; peak 1."""
    s = (np.asarray(xi, dtype=float) - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def left_cutoff(xi, at, scale):
    """1 right of ``at``, Gaussian roll-off to the left of it."""
    xi = np.asarray(xi, dtype=float)
    return np.where(xi >= at, 1.0, np.exp(-(((xi - at) / scale) ** 2)))


def make_perturbation(spec: ExperimentSpec, phi) -> np.ndarray:
    """Initial perturbation u0 on the grid, clipped so that phi + u0 >= 0."""
    xi = spec.grid.xi
    vp = equilibria(spec.mp).v_plus
    kind = spec.perturbation
    if kind == "bump":
        u0 = spec.amplitude * compact_bump(xi, spec.center, spec.width)
    elif kind == "shift":
        u0 = np.interp(xi + spec.amplitude, xi, phi) - phi
    elif kind == "packet":
        env = compact_bump(xi, spec.center, 2 * spec.width)
        u0 = spec.amplitude * env * np.sin(2 * np.pi * (xi - spec.center) / spec.width)
    elif kind == "large":
        env = compact_bump(xi, spec.center, 2 * spec.width)
        u0 = vp * env * np.cos(np.pi * (xi - spec.center) / spec.width)
    else:
        # three seeded bumps of either sign around the center
        rng = np.random.default_rng(spec.seed)
        u0 = np.zeros_like(xi)
        for c0, amp in zip(rng.uniform(-2, 2, 3), rng.uniform(-1, 1, 3)):
            u0 += spec.amplitude * amp * compact_bump(xi, spec.center + c0 * spec.width,
                                                      spec.width)
    u0 = u0 * left_cutoff(xi, spec.cutoff_at, spec.cutoff_scale)
    u0 = np.maximum(u0, -np.asarray(phi))
    u0[0] = u0[-1] = 0.0
    return u0


def check_admissible(spec: ExperimentSpec, u0) -> float:
    """Weighted size sup |exp(-lam xi) u0|; raises if it is not finite."""
    ut0 = antiweight(spec.ws, spec.grid, u0)
    s = float(np.max(np.abs(ut0)))
    if not math.isfinite(s):
        raise ConfigError("perturbation is not admissible: exp(-lam xi) u0 unbounded on the grid")
    return s


def select_x0(grid: Grid1D, phi, v_plus: float, band: float = X0_BAND) -> float:
    """Smallest grid point beyond which |phi - v_plus| < band v_plus everywhere."""
    bad = np.nonzero(np.abs(np.asarray(phi) - v_plus) >= band * v_plus)[0]
    if bad.size == 0:
        return float(grid.xi[0])
    i = int(bad.max()) + 1
    if i >= grid.n:
        raise ConfigError("profile never settles near v_plus on the grid")
    return float(grid.xi[i])


@dataclass
class ZoneReport:
    fit: RateFit | None
    passed: bool
    note: str = ""


@dataclass
class StabilityResult:
    spec: ExperimentSpec
    profile: WaveProfile
    series: dict
    x0: float
    fit: RateFit | None
    mixed: RateFit | None
    far: ZoneReport
    near: ZoneReport
    boundedness_gap: float
    min_uplus: float
    delay_bound_excess: float
    weight_transfer_excess: float
    mu0: float
    mu_bound: float
    wall: dict = field(default_factory=dict)

    def summary(self) -> dict:
        def fd(f):
            return None if f is None else f.as_dict()

        return {
            "c": self.spec.ws.c,
            "lambda": self.spec.ws.lam,
            "critical": self.spec.ws.critical,
            "x0": self.x0,
            "fit": fd(self.fit),
            "mixed": fd(self.mixed),
            "far": {"fit": fd(self.far.fit), "passed": self.far.passed, "note": self.far.note},
            "near": {"fit": fd(self.near.fit), "passed": self.near.passed, "note": self.near.note},
            "boundedness_gap": self.boundedness_gap,
            "min_uplus": self.min_uplus,
            "delay_bound_excess": self.delay_bound_excess,
            "weight_transfer_excess": self.weight_transfer_excess,
            "mu0": self.mu0,
            "mu_bound": self.mu_bound,
            "profile_residual": self.profile.residual,
            "wall": self.wall,
        }


def _safe_fit(t, y, model, window):
    try:
        return fit_decay(t, y, model, window)
    except FitError:
        return None


def fit_main(series, ws: WaveSpec, window, column="sup_u"):
    """(primary fit, mixed-model fit): algebraic for c = c*, exponential otherwise."""
    t, y = series["t"], series[column]
    primary = _safe_fit(t, y, "algebraic" if ws.critical else "exponential", window)
    return primary, _safe_fit(t, y, "mixed", window)


def zone_far(series, x0, delta: float, window, tol: float = 1e-9, r2_min: float = 0.98):
    """Exponential fit of sup over [x0, L] of |u|; passes iff 0 < mu2 < delta and R^2 >= r2_min."""
    fit = _safe_fit(series["t"], series["sup_u_far"], "exponential", window)
    if fit is None:
        return ZoneReport(None, False, "series not fittable")
    ok = 0 < fit.exp_rate < delta + tol and fit.r_squared >= r2_min
    return ZoneReport(fit, bool(ok), f"x0={x0:.6g}")


def zone_near(series, x0, ws: WaveSpec, window):
    """Fit of sup over [-L, x0) of |u|: algebraic (c = c*) or mixed (c > c*)."""
    model = "algebraic" if ws.critical else "mixed"
    fit = _safe_fit(series["t"], series["sup_u_near"], model, window)
    if fit is None:
        return ZoneReport(None, False, "series not fittable")
    if ws.critical:
        ok = -0.65 <= fit.alg_exponent <= -0.35
    else:
        ok = fit.exp_rate > 0
    return ZoneReport(fit, bool(ok), f"x0={x0:.6g}")


def run_stability(spec: ExperimentSpec, profile: WaveProfile | None = None) -> StabilityResult:
    """Evolve a perturbation of the front and measure its decay."""
    mp, ws, grid = spec.mp, spec.ws, spec.grid
    mp.require_in_scope()
    wall = {}
    t0 = time.perf_counter()
    if profile is None:
        profile = compute_profile(ws, mp, grid)
    wall["profile"] = time.perf_counter() - t0
    phi = profile.phi
    vp = equilibria(mp).v_plus
    u0 = make_perturbation(spec, phi)
    check_admissible(spec, u0)
    x0 = select_x0(grid, phi, vp) if spec.x0 is None else float(spec.x0)
    split = int(np.searchsorted(grid.xi, x0))

    fields = [perturbation_field(ws, mp, phi, u0, grid, spec.dt, spec.scheme)]
    monitors = []
    neg = bnd = dbm = None
    if spec.coupled:
        ut0 = antiweight(ws, grid, u0)
        fields.append(antiweighted_field(ws, mp, phi, ut0, grid, fields[0].dt, spec.scheme))
        fields.append(comparison_field(ws, mp, np.abs(ut0), grid, fields[0].dt, spec.scheme))
        neg = NegativityMonitor("uplus")
        bnd = BoundednessMonitor("utilde", "uplus")
        dbm = DelayBoundMonitor("utilde", coefficients(ws, mp)[2])
        monitors = [neg, bnd, dbm]
    dt = fields[0].dt
    every = max(1, int(round(spec.record_dt / dt)))
    e_lx0 = math.exp(min(ws.lam * x0, 700.0))
    transfer = {"excess": -np.inf}

    def sups(fs):
        s_all, s_lo, s_hi = _kernels.sup_abs_split(fs["u"].u, split)
        out = [s_all, s_lo, s_hi]
        if spec.coupled:
            ut = fs["utilde"].u
            _, ut_lo, _ = _kernels.sup_abs_split(ut, split)
            out += [float(np.max(np.abs(ut))), float(np.max(fs["uplus"].u))]
            transfer["excess"] = max(transfer["excess"], s_lo - e_lx0 * ut_lo * (1 + 1e-9))
        else:
            out += [float("nan"), float("nan")]
        return out

    t1 = time.perf_counter()
    raw = march(fields, spec.t_end, record_every=every, diagnostics={"s": sups},
                monitors=monitors)
    wall["evolve"] = time.perf_counter() - t1
    arr = np.array(raw.scalars["s"])
    series = {"t": np.asarray(raw.t)}
    for k, name in enumerate(SERIES_COLUMNS[1:]):
        series[name] = arr[:, k]

    window = spec.window()
    fit, mixed = fit_main(series, ws, window)
    far = zone_far(series, x0, mp.delta, window)
    near = zone_near(series, x0, ws, window)
    excess = dbm.max_excess if dbm else float("nan")
    return StabilityResult(
        spec=spec,
        profile=profile,
        series=series,
        x0=x0,
        fit=fit,
        mixed=mixed,
        far=far,
        near=near,
        boundedness_gap=bnd.min_gap if bnd else float("nan"),
        min_uplus=neg.minimum if neg else float("nan"),
        delay_bound_excess=float(excess),
        weight_transfer_excess=float(transfer["excess"]),
        mu0=float("nan") if ws.critical else mu0(ws, mp),
        mu_bound=float("nan") if ws.critical else mu_bound(ws, mp),
        wall=wall,
    )


def doubled(spec: ExperimentSpec) -> ExperimentSpec:
    """Same experiment on [-2L, 2L] at identical spacing."""
    g = spec.grid
    return replace(spec, grid=Grid1D(2 * g.L, 2 * g.n - 1))
