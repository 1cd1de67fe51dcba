"""Command line interface.

    blowfly <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--parallel <n>]

Subcommands and the CSV files they write (one header row, 17 significant
digits, trailing ``#manifest=`` line):

    speeds        speeds.csv        c_star,lambda_star,r_under,r_bar,c_upper,lambda_upper,r0,regime,c,lambda,shape
    profile       profile.csv       xi,phi
    evolve        evolve.csv        t,xi,value
    delayed-exp   delayed_exp.csv   t,E
    farfield      farfield.csv      t,z
    linear-decay  linear_decay.csv  t,sup_uplus
    stability     stability.csv     t,sup_u,sup_u_near,sup_u_far,sup_utilde,sup_uplus
    sweep         sweep.csv         r,c_factor,c,theory,numeric,crossings,residual,agree

Exit codes: 0 success, 1 a checked property failed, 2 configuration
error, 3 numerical failure. BLOWFLY_OUT overrides --out.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .charspec import (
    Shape,
    classify_regime,
    delay_thresholds,
    min_speed,
    spectral_profile,
    wave_spec,
)
from .config import RunConfig, parse_config
from .delayode import DelayedExpParams, delayed_exp, farfield_linear_rate, farfield_ode
from .errors import (
    BlowflyError,
    ConfigError,
    FitError,
    NumericalError,
    PreconditionError,
    RegimeError,
)
from .lindelay import evolve_spectral, measure_linear_decay
from .model import ModelParams, equilibria
from .pde import (
    Grid1D,
    antiweight,
    evolve_antiweighted,
    evolve_comparison,
    evolve_lab,
    evolve_perturbation,
    frame_speed,
    stable_dt,
)
from .stability import SERIES_COLUMNS, ExperimentSpec, compact_bump, make_perturbation, run_stability
from .waves import classify_profile, compute_profile

EXIT_OK, EXIT_FALSIFIED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("speeds", "profile", "evolve", "delayed-exp", "farfield", "linear-decay", "stability",
            "sweep")
MANIFEST = "manifest.json"

TOLERANCES = {
    "profile_residual": 1e-10,
    "positivity": -1e-12,
    "boundedness": -1e-8,
    "critical_exponent": [-0.65, -0.35],
    "critical_r2": 0.98,
    "noncritical_r2": 0.99,
    "far_zone_r2": 0.98,
    "dt_safety": 0.4,
}


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _clean(obj):
    """JSON-safe copy: NaN and infinities become None, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if hasattr(obj, "value") and hasattr(obj, "name"):
        return obj.value
    return obj


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Run:
    """Output directory bookkeeping for one invocation."""

    out: str
    cfg: RunConfig
    command: str
    seed: int
    figures: bool = True
    outputs: list = field(default_factory=list)
    criteria: dict = field(default_factory=dict)
    wall: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def path(self, name):
        return os.path.join(self.out, name)

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(fmt(v) for v in row))
        lines.append(f"#manifest={MANIFEST}")
        _atomic_write(self.path(name), "\n".join(lines) + "\n")
        self.outputs.append(name)

    def write_json(self, name, obj):
        _atomic_write(self.path(name), json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
        self.outputs.append(name)

    def figure(self, name, fn, *args, **kw):
        if not self.figures:
            return
        t0 = time.perf_counter()
        fn(self.path(name), *args, **kw)
        self.outputs.append(name)
        self.wall["figures"] = self.wall.get("figures", 0.0) + time.perf_counter() - t0

    def criterion(self, name, passed, detail):
        self.criteria[name] = "PASS" if passed else "FAIL"
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}", flush=True)

    def stage(self, name):
        run = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.wall[name] = run.wall.get(name, 0.0) + time.perf_counter() - self.t0

        return _Stage()

    def manifest(self, exit_code, error=None):
        mp = self.cfg.model
        try:
            sp = spectral_profile(mp).as_row()
        except BlowflyError:
            sp = None
        doc = {
            "version": __version__,
            "command": self.command,
            "config_path": self.cfg.source,
            "config": self.cfg.snapshot(),
            "seed": self.seed,
            "spectral_profile": sp,
            "tolerances": TOLERANCES,
            "criteria": self.criteria,
            "wall_clock_s": self.wall,
            "outputs": self.outputs,
            "exit_code": exit_code,
            "error": error,
        }
        doc.update(self.extra)
        _atomic_write(self.path(MANIFEST), json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- config helpers


def resolve_wave(cfg: RunConfig, mp: ModelParams | None = None):
    mp = mp or cfg.model
    mp.require_in_scope()
    star = min_speed(mp)
    kind, value = cfg.wave["c"]
    c = value * star[0] if kind == "critical" else value
    if kind == "critical" and value == 1.0:
        c = "critical"
    elif c < star[0] * (1 - 1e-9):
        raise ConfigError("c below critical speed")
    return wave_spec(mp, c, cfg.wave["lambda"], star=star)


def make_grid(cfg: RunConfig, shift: float = 0.0) -> Grid1D:
    g = cfg.grid
    if g["snap"] and shift > 0:
        return Grid1D.snapped(g["L"], g["n"], shift)
    return Grid1D(g["L"], g["n"])


def experiment_spec(cfg: RunConfig, seed: int) -> ExperimentSpec:
    mp = cfg.model
    ws = resolve_wave(cfg)
    e = cfg.experiment
    window = None
    if e["fit_lo"] is not None or e["fit_hi"] is not None:
        lo = e["fit_lo"] if e["fit_lo"] is not None else max(10 * mp.r, 20.0)
        hi = e["fit_hi"] if e["fit_hi"] is not None else e["t_end"]
        window = (lo, hi)
    return ExperimentSpec(mp, ws, make_grid(cfg, ws.c * mp.r), perturbation=e["perturbation"],
                          amplitude=e["amplitude"], center=e["center"], width=e["width"],
                          t_end=e["t_end"], dt=cfg.grid["dt"], x0=e["x0"],
                          record_dt=e["record_dt"], fit_window=window,
                          scheme=cfg.wave["scheme"], seed=seed)


def _every(interval, dt):
    return max(1, int(round(interval / dt)))


# ---------------------------------------------------------------- subcommands


def cmd_speeds(run: Run):
    cfg = run.cfg
    with run.stage("speeds"):
        row = spectral_profile(cfg.model).as_row()
        ws = resolve_wave(cfg)
        shape = classify_regime(cfg.model, ws.c)
    header = list(row) + ["c", "lambda", "shape"]
    run.write_csv("speeds.csv", header, [list(row.values()) + [ws.c, ws.lam, shape.value]])
    return EXIT_OK


def cmd_profile(run: Run):
    cfg, mp = run.cfg, run.cfg.model
    ws = resolve_wave(cfg)
    grid = make_grid(cfg, ws.c * mp.r)
    with run.stage("profile"):
        wp = compute_profile(ws, mp, grid, tol=TOLERANCES["profile_residual"])
    label = classify_profile(wp, equilibria(mp).v_plus)
    theory = classify_regime(mp, ws.c)
    run.write_csv("profile.csv", ["xi", "phi"], zip(grid.xi, wp.phi))
    run.write_json("profile.json", {
        "c": ws.c, "lambda": ws.lam, "critical": ws.critical, "L": grid.L, "n": grid.n,
        "residual": wp.residual, "iterations": wp.iterations, "tail_rate": wp.tail_rate,
        "crossings": wp.crossings, "numeric": label.value, "theory": theory.value,
    })
    run.figure("profile.png", _fig().line_plot, grid.xi, {"phi": wp.phi}, xlabel="xi",
               ylabel="phi", title=f"c = {ws.c:.6g} ({label.value})",
               hline=equilibria(mp).v_plus)
    return EXIT_OK


def cmd_evolve(run: Run):
    cfg, mp, e = run.cfg, run.cfg.model, run.cfg.experiment
    form = e["form"]
    t_end = e["t_end"]
    if form == "lab":
        grid = make_grid(cfg)
        vp = equilibria(mp).v_plus
        v0 = np.where(grid.xi >= 0.75 * grid.L, vp, 0.0)
        dt = cfg.grid["dt"] or stable_dt(grid, mp.D, 0.0, mp.r)
        with run.stage("evolve"):
            f, series = evolve_lab(mp, v0, grid, dt, t_end, snapshot_every=_every(e["snapshot_dt"], dt))
        snaps, name = series.snapshots["v"], "v"
        run.extra["min_value"] = series.scalars["min_v"][0]
    else:
        spec = experiment_spec(cfg, run.seed)
        ws, grid = spec.ws, spec.grid
        with run.stage("profile"):
            wp = compute_profile(ws, mp, grid, tol=TOLERANCES["profile_residual"])
        u0 = make_perturbation(spec, wp.phi)
        dt = cfg.grid["dt"] or stable_dt(grid, mp.D, frame_speed(ws, mp), mp.r)
        every = _every(e["snapshot_dt"], dt)
        with run.stage("evolve"):
            if form == "perturbation":
                f, series = evolve_perturbation(ws, mp, wp.phi, u0, grid, dt, t_end,
                                                snapshot_every=every, scheme=spec.scheme)
            elif form == "antiweighted":
                f, series = evolve_antiweighted(ws, mp, wp.phi, antiweight(ws, grid, u0), grid,
                                                dt, t_end, snapshot_every=every,
                                                scheme=spec.scheme)
                run.extra["delay_bound_excess"] = series.scalars["delay_bound_excess"][0]
            else:
                f, series = evolve_comparison(ws, mp, np.abs(antiweight(ws, grid, u0)), grid, dt,
                                              t_end, snapshot_every=every, scheme=spec.scheme)
                run.extra["min_value"] = series.scalars["min_uplus"][0]
        name = f.name
        snaps = series.snapshots[name]
    times = np.asarray(series.t)
    stride = e["stride"]
    xi = grid.xi[::stride]
    rows = ((t, x, v) for t, snap in zip(times, snaps) for x, v in zip(xi, snap[::stride]))
    run.write_csv("evolve.csv", ["t", "xi", "value"], rows)
    run.write_json("evolve.json", {"form": form, "field": name, "dt": dt, "L": grid.L,
                                   "n": grid.n, "stride": stride, "snapshots": len(times)})
    run.figure("evolve.png", _fig().snapshot_plot, grid.xi, times, snaps, ylabel=name,
               title=f"{form} evolution")
    return EXIT_OK


def cmd_delayed_exp(run: Run):
    e, mp = run.cfg.experiment, run.cfg.model
    t = np.linspace(e["t_min"], e["t_max"], e["samples"])
    with run.stage("delayed_exp"):
        E = delayed_exp(DelayedExpParams(e["k_bar"], mp.r), t)
    run.write_csv("delayed_exp.csv", ["t", "E"], zip(t, np.real(E)))
    run.figure("delayed_exp.png", _fig().line_plot, t, {"E": np.real(E)}, xlabel="t",
               ylabel="E(t)", title=f"k = {e['k_bar']:.6g}, r = {mp.r:.6g}")
    return EXIT_OK


def cmd_farfield(run: Run):
    e, mp = run.cfg.experiment, run.cfg.model
    vp = equilibria(mp).v_plus
    z0 = 0.05 * vp if e["z0"] is None else e["z0"]
    with run.stage("farfield"):
        t, z = farfield_ode(mp, z0, e["t_end"], dt=e["ode_dt"], blowup_factor=e["blowup_factor"])
    z = np.asarray(z, dtype=float)
    run.write_csv("farfield.csv", ["t", "z"], zip(t, z))
    run.write_json("farfield.json", {"z0": z0, "v_plus": vp, "final": float(z[-1]),
                                     "max_abs_late": float(np.max(np.abs(z[len(z) // 2:]))),
                                     "undelayed_rate": farfield_linear_rate(mp)})
    run.figure("farfield.png", _fig().line_plot, t, {"|z|": np.abs(z)}, xlabel="t", ylabel="|z|",
               logy=True, title="far-field perturbation")
    return EXIT_OK


def cmd_linear_decay(run: Run):
    cfg, mp, e = run.cfg, run.cfg.model, run.cfg.experiment
    ws = resolve_wave(cfg)
    grid = make_grid(cfg, ws.c * mp.r)
    hist = e["amplitude"] * compact_bump(grid.xi, e["center"], e["width"])
    dt = cfg.grid["dt"] or stable_dt(grid, mp.D, frame_speed(ws, mp), mp.r)
    with run.stage("spectral"):
        ser = evolve_spectral(grid, hist, ws, mp, e["t_end"], dt=dt,
                              record_every=_every(e["record_dt"], dt))
    window = None
    if e["fit_lo"] is not None or e["fit_hi"] is not None:
        window = (e["fit_lo"] if e["fit_lo"] is not None else 5 * mp.r,
                  e["fit_hi"] if e["fit_hi"] is not None else e["t_end"])
    rep = measure_linear_decay(ser.t, ser.sup, ws, mp, window)
    run.write_csv("linear_decay.csv", ["t", "sup_uplus"], zip(ser.t, ser.sup))
    run.write_json("linear_decay.json", {"fit": rep.fit.as_dict(), "mu0": rep.mu0,
                                         "ratio": rep.ratio, "decaying": rep.decaying,
                                         "warnings": ser.warnings})
    if ws.critical:
        detail = f"exponent {rep.fit.alg_exponent:.4f} in [-0.65, -0.35]"
    else:
        detail = f"mu {rep.fit.exp_rate:.4g} > 0, R^2 {rep.fit.r_squared:.5f} >= 0.99"
    run.criterion("linear_decay", rep.passed, detail)
    run.figure("linear_decay.png", _fig().line_plot, 1 + ser.t, {"sup u+": ser.sup},
               xlabel="1 + t", ylabel="sup", logx=ws.critical, logy=True,
               title="comparison equation decay")
    return EXIT_OK if rep.passed else EXIT_FALSIFIED


def stability_checks(res):
    """(name, passed, detail) for every property a stability run verifies."""
    ws, mp = res.spec.ws, res.spec.mp
    out = [
        ("positivity", res.min_uplus >= TOLERANCES["positivity"],
         f"min u+ = {res.min_uplus:.3e} >= -1e-12"),
        ("boundedness", res.boundedness_gap >= TOLERANCES["boundedness"],
         f"min(u+ - |ut|) = {res.boundedness_gap:.3e} >= -1e-8"),
        ("delay_bound", res.delay_bound_excess <= 0,
         f"max excess {res.delay_bound_excess:.3e} <= 0"),
    ]
    fit, mixed = res.fit, res.mixed
    if fit is None:
        out.append(("decay_rate", False, "series not fittable"))
    elif ws.critical:
        lo, hi = TOLERANCES["critical_exponent"]
        ok_mixed = mixed is not None and abs(mixed.exp_rate) <= 2 * mixed.exp_sigma
        ok = lo <= fit.alg_exponent <= hi and fit.r_squared >= TOLERANCES["critical_r2"] and ok_mixed
        mdet = "n/a" if mixed is None else f"{mixed.exp_rate:.3e} +- {mixed.exp_sigma:.1e}"
        out.append(("decay_rate", ok,
                    f"exponent {fit.alg_exponent:.4f} (R^2 {fit.r_squared:.5f}), mixed mu {mdet}"))
    else:
        ok = fit.exp_rate > 0 and fit.r_squared >= TOLERANCES["noncritical_r2"] and res.mu_bound > 0
        out.append(("decay_rate", ok, f"mu {fit.exp_rate:.4g} (R^2 {fit.r_squared:.5f}), "
                                      f"bound {res.mu_bound:.4g}"))
    far = res.far.fit
    fdet = "not fittable" if far is None else (
        f"mu2 {far.exp_rate:.4g} in (0, {mp.delta:g}), R^2 {far.r_squared:.5f}")
    out.append(("far_zone", res.far.passed, fdet))
    return out


def cmd_stability(run: Run):
    spec = experiment_spec(run.cfg, run.seed)
    with run.stage("stability"):
        res = run_stability(spec)
    run.wall.update({f"stability.{k}": v for k, v in res.wall.items()})
    s = res.series
    run.write_csv("stability.csv", list(SERIES_COLUMNS), zip(*(s[c] for c in SERIES_COLUMNS)))
    summary = res.summary()
    summary.pop("wall")
    run.write_json("stability.json", summary)
    ok = True
    for name, passed, detail in stability_checks(res):
        run.criterion(name, passed, detail)
        ok &= bool(passed)
    run.figure("stability.png", _fig().line_plot, s["t"],
               {c: s[c] for c in SERIES_COLUMNS[1:]}, xlabel="t", ylabel="sup",
               logx=spec.ws.critical, logy=True, title="perturbation norms")
    return EXIT_OK if ok else EXIT_FALSIFIED


def default_sweep_r(mp: ModelParams):
    ru, rb = delay_thresholds(mp)
    ru = ru or 0.0
    hi = rb if math.isfinite(rb) else 2.0 * max(ru, 1.0)
    return (0.5 * ru if ru > 0 else 0.05, 0.5 * (ru + hi), ru + 0.9 * (hi - ru))


def sweep_cell(args):
    """Profile and labels of one (r, c/c*) cell; writes its own profile CSV."""
    mp, factor, grid_cfg, out_path = args
    row = {"r": mp.r, "c_factor": factor, "c": float("nan"), "theory": "", "numeric": "",
           "crossings": -1, "residual": float("nan"), "agree": False, "error": ""}
    try:
        star = min_speed(mp)
        c = star[0] * factor
        ws = wave_spec(mp, "critical" if factor == 1.0 else c, star=star)
        row["c"] = ws.c
        theory = classify_regime(mp, ws.c, star=star)
        row["theory"] = theory.value
        if theory is Shape.NOWAVE:
            row["numeric"] = "skipped"
            row["agree"] = True
            return row
        L, n, snap = grid_cfg
        grid = Grid1D.snapped(L, n, ws.c * mp.r) if snap and mp.r > 0 else Grid1D(L, n)
        wp = compute_profile(ws, mp, grid, tol=TOLERANCES["profile_residual"])
        label = classify_profile(wp, equilibria(mp).v_plus)
        row.update(numeric=label.value, crossings=wp.crossings, residual=wp.residual,
                   agree=label is Shape.AMBIGUOUS or label is theory)
        lines = ["xi,phi"] + [f"{fmt(x)},{fmt(v)}" for x, v in zip(grid.xi, wp.phi)]
        lines.append(f"#manifest=../{MANIFEST}")
        _atomic_write(out_path, "\n".join(lines) + "\n")
    except NumericalError as exc:
        row["error"] = f"numerical: {exc}"
    except BlowflyError as exc:
        row["error"] = f"config: {exc}"
    return row


def cmd_sweep(run: Run, parallel: int):
    cfg, mp, e = run.cfg, run.cfg.model, run.cfg.experiment
    mp.require_in_scope()
    rs = e["sweep_r"] or default_sweep_r(mp)
    factors = e["sweep_c"]
    if any(f < 1.0 for f in factors):
        raise ConfigError("c below critical speed")
    cell_dir = run.path("sweep_cells")
    os.makedirs(cell_dir, exist_ok=True)
    g = cfg.grid
    jobs = []
    for i, r in enumerate(rs):
        for j, f in enumerate(factors):
            jobs.append((mp.replace(r=r), f, (g["L"], g["n"], g["snap"]),
                         os.path.join(cell_dir, f"cell_{i}_{j}.csv")))
    with run.stage("sweep"):
        if parallel > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                rows = list(pool.map(sweep_cell, jobs))
        else:
            rows = [sweep_cell(j) for j in jobs]
    for row, job in zip(rows, jobs):
        if os.path.exists(job[3]):
            run.outputs.append(os.path.relpath(job[3], run.out))
    cols = ["r", "c_factor", "c", "theory", "numeric", "crossings", "residual", "agree"]
    run.write_csv("sweep.csv", cols, ([row[c] for c in cols] for row in rows))
    errors = [row for row in rows if row["error"]]
    run.extra["sweep_errors"] = [{"r": r["r"], "c_factor": r["c_factor"], "error": r["error"]}
                                 for r in errors]
    run.figure("sweep.png", _fig().phase_map, rows)
    if any(r["error"].startswith("numerical") for r in errors):
        return EXIT_NUMERICAL
    if errors:
        return EXIT_CONFIG
    ok = all(row["agree"] for row in rows)
    bad = [f"(r={r['r']:.4g}, c={r['c_factor']:.4g}c*)" for r in rows if not r["agree"]]
    run.criterion("phase_map", ok, "all non-ambiguous cells agree" if ok else
                  "disagreement at " + ", ".join(bad))
    return EXIT_OK if ok else EXIT_FALSIFIED


def _fig():
    from . import figures

    return figures


# ---------------------------------------------------------------- entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="blowfly",
                                 description="Delayed Nicholson's blowflies front laboratory.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="sectioned key = value file")
    ap.add_argument("--out", default=".", help="output directory (BLOWFLY_OUT overrides)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized perturbations")
    ap.add_argument("--parallel", type=int, default=1, help="worker processes for sweep")
    ap.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def dispatch(command, cfg: RunConfig, out: str, seed: int = 0, parallel: int = 1,
             figures: bool = True) -> int:
    """Run one subcommand into ``out`` and return its exit code."""
    os.makedirs(out, exist_ok=True)
    run = Run(out, cfg, command, seed, figures)
    handlers = {
        "speeds": cmd_speeds, "profile": cmd_profile, "evolve": cmd_evolve,
        "delayed-exp": cmd_delayed_exp, "farfield": cmd_farfield,
        "linear-decay": cmd_linear_decay, "stability": cmd_stability,
    }
    error = None
    try:
        code = cmd_sweep(run, parallel) if command == "sweep" else handlers[command](run)
    except (ConfigError, RegimeError, PreconditionError) as exc:
        error, code = str(exc), EXIT_CONFIG
    except FitError as exc:
        # too few samples or a bad window: both come from the configuration
        error, code = f"fit: {exc}", EXIT_CONFIG
    except NumericalError as exc:
        error, code = str(exc), EXIT_NUMERICAL
    if error:
        print(f"error: {error}", file=sys.stderr)
    run.manifest(code, error)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.parallel < 1:
        print("error: --parallel must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = os.environ.get("BLOWFLY_OUT") or args.out
    return dispatch(args.command, cfg, out, args.seed, args.parallel, not args.no_figures)


if __name__ == "__main__":
    sys.exit(main())
