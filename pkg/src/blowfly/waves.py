"""Traveling-wave profiles of c phi' - D phi'' + delta phi = b(phi(xi - c r)).

Profiles are steady states of the moving-frame flow
phi_t = D phi'' - c phi' - delta phi + b(phi(xi - c r)). They are computed
directly by damped Newton on the discretized steady equation, with the
translation fixed by pinning phi(0) = v_plus / 2 and ghost values left of
the grid continued along the exponential tail of the front.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .charspec import Shape, WaveSpec, classify_regime, lambda_pair
from .errors import ConvergenceError, RegimeError
from .model import ModelParams, equilibria
from .pde import DelayedShift, Grid1D, profile_ghost

NOISE_REL = 1e-6
MONO_SLACK = 1e-8


@dataclass
class WaveProfile:
    grid: Grid1D
    phi: np.ndarray
    c: float
    residual: float
    crossings: int
    tail_rate: float
    iterations: int = 0

    @property
    def xi(self):
        return self.grid.xi


def tail_rate_for(ws: WaveSpec, mp: ModelParams) -> float:
    """Left-tail exponent used for ghost values: lambda_1 for c > c*, lambda* at c*."""
    if ws.critical:
        return ws.lam
    return lambda_pair(mp, ws.c)[0]


def _ops(grid: Grid1D, c: float, D: float, shift: float, tail: float):
    n, dx = grid.n, grid.dx
    sh = DelayedShift(grid, shift)
    gc = np.exp(tail * (sh.ghost_positions() + grid.L))
    S = sh.matrix(gc)
    e = np.ones(n)
    d1 = sp.diags([-e[:-1], e[:-1]], [-1, 1], shape=(n, n)) / (2 * dx)
    d2 = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], shape=(n, n)) / dx**2
    L = (c * d1 - D * d2).tocsr()
    return sh, S, L


def _interior_residual(phi, mp, c, sh, tail):
    dx = sh.grid.dx
    phs = sh.apply(phi, profile_ghost(sh, phi, tail))
    phs = np.maximum(phs, 0.0)
    res = (
        c * (phi[2:] - phi[:-2]) / (2 * dx)
        - mp.D * (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / dx**2
        + mp.delta * phi[1:-1]
        - mp.p * phs[1:-1] * np.exp(-mp.a * phs[1:-1])
    )
    return res, phs


def profile_residual(wp: WaveProfile, mp: ModelParams) -> float:
    """Max-norm residual of the discretized profile equation over the interior."""
    sh = DelayedShift(wp.grid, wp.c * mp.r)
    res, _ = _interior_residual(np.asarray(wp.phi, dtype=float), mp, wp.c, sh, wp.tail_rate)
    return float(np.max(np.abs(res))) if res.size else 0.0


def _pin_row(grid: Grid1D):
    x = grid.xi
    j = int(np.clip(np.searchsorted(x, 0.0) - 1, 0, grid.n - 2))
    w = (x[j + 1] - 0.0) / (x[j + 1] - x[j])
    return j, w


def initial_guess(grid: Grid1D, v_plus: float, tail: float):
    """Smoothed step with the prescribed left exponential tail."""
    s = max(tail, 0.2)
    return v_plus / (1.0 + np.exp(-s * grid.xi))


def compute_profile(ws: WaveSpec, mp: ModelParams, grid: Grid1D, phi0=None,
                    tol: float = 1e-10, max_iter: int = 60, verbose: bool = False):
    """Converged traveling-wave profile for speed ws.c on ``grid``.

    Damped Newton on the discretized steady equation from a smoothed step
    (or ``phi0``). ``tol`` is the max-norm target for the residual.
    """
    mp.require_in_scope()
    if classify_regime(mp, ws.c) is Shape.NOWAVE:
        raise RegimeError("no traveling wave exists for these parameters")
    vp = equilibria(mp).v_plus
    tail = tail_rate_for(ws, mp)
    sh, S, Lop = _ops(grid, ws.c, mp.D, ws.c * mp.r, tail)
    n = grid.n
    phi = initial_guess(grid, vp, tail) if phi0 is None else np.array(phi0, dtype=float)
    phi[-1] = vp
    j, w = _pin_row(grid)

    def full_residual(ph):
        res, phs = _interior_residual(ph, mp, ws.c, sh, tail)
        F = np.empty(n)
        F[1:-1] = res
        F[-1] = ph[-1] - vp
        F[0] = w * ph[j] + (1 - w) * ph[j + 1] - vp / 2
        return F, phs

    pin = sp.csr_matrix(([w, 1 - w], ([0, 0], [j, j + 1])), shape=(n, n))
    right = sp.csr_matrix(([1.0], ([n - 1], [n - 1])), shape=(n, n))
    keep = sp.diags(np.r_[0.0, np.ones(n - 2), 0.0])
    base = keep @ (Lop + mp.delta * sp.identity(n))
    keepS = keep @ S

    F, phs = full_residual(phi)
    norm = float(np.max(np.abs(F)))
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"profile did not converge (residual {norm:.3e} after {it} iterations)",
                residual=norm,
                step=it,
            )
        it += 1
        bp = mp.p * (1 - mp.a * phs) * np.exp(-mp.a * phs)
        J = (base - sp.diags(bp) @ keepS + pin + right).tocsc()
        step = spsolve(J, -F)
        theta = 1.0
        while True:
            trial = phi + theta * step
            Ft, phst = full_residual(trial)
            nt = float(np.max(np.abs(Ft)))
            if verbose:
                print(it, theta, norm, nt)
            if np.isfinite(nt) and nt < (1 - 1e-4 * theta) * norm:
                break
            theta /= 2
            if theta < 1e-6:
                raise ConvergenceError("Newton line search failed", residual=norm, step=it)
        phi, F, phs, norm = trial, Ft, phst, nt
    wp = WaveProfile(grid, phi, ws.c, 0.0, 0, tail, it)
    wp.residual = profile_residual(wp, mp)
    wp.crossings = count_crossings(grid, phi, vp)
    return wp


def _significant_signs(d, floor):
    s = np.sign(d)
    s[np.abs(d) <= floor] = 0
    return s[s != 0]


def count_crossings(grid: Grid1D, phi, v_plus: float, floor_rel: float = NOISE_REL) -> int:
    """Sign changes of phi - v_plus on xi >= 0, ignoring values within the noise floor."""
    d = np.asarray(phi)[grid.xi >= 0] - v_plus
    s = _significant_signs(d, floor_rel * v_plus)
    return int(np.count_nonzero(s[1:] != s[:-1]))


def classify_profile(wp: WaveProfile, v_plus: float | None = None,
                     floor_rel: float = NOISE_REL) -> Shape:
    """Monotone / Oscillatory / Ambiguous label from the profile's crossings of v_plus."""
    phi = np.asarray(wp.phi)
    vp = float(phi[-1]) if v_plus is None else v_plus
    floor = floor_rel * vp
    right = phi[wp.grid.xi >= 0] - vp
    s = _significant_signs(right, floor)
    crossings = int(np.count_nonzero(s[1:] != s[:-1]))
    if crossings >= 2:
        first = int(np.argmax(np.sign(right) == -s[0]))
        amplitude = float(np.max(np.abs(right[first:])))
        return Shape.OSCILLATORY if amplitude > 10 * floor else Shape.AMBIGUOUS
    if crossings == 1:
        return Shape.AMBIGUOUS
    if np.all(np.diff(phi) >= -MONO_SLACK):
        return Shape.MONOTONE
    return Shape.AMBIGUOUS


def tail_slope(wp: WaveProfile, lo_frac: float = 0.9, hi_frac: float = 0.6):
    """Least-squares slope of log phi on the left part of the grid.

    The window is xi in [-lo_frac L, -hi_frac L]; positive values only.
    """
    x = wp.grid.xi
    L = wp.grid.L
    sel = (x >= -lo_frac * L) & (x <= -hi_frac * L) & (np.asarray(wp.phi) > 0)
    if sel.sum() < 10:
        return float("nan")
    return float(np.polyfit(x[sel], np.log(np.asarray(wp.phi)[sel]), 1)[0])


def critical_profile(mp: ModelParams, grid: Grid1D, **kw) -> WaveProfile:
    from .charspec import wave_spec

    return compute_profile(wave_spec(mp, "critical"), mp, grid, **kw)


__all__ = [
    "WaveProfile",
    "compute_profile",
    "profile_residual",
    "classify_profile",
    "count_crossings",
    "tail_slope",
    "tail_rate_for",
    "critical_profile",
]
