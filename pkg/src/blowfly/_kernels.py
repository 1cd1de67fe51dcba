"""Compiled single-step kernels for the explicit delayed solvers."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

LAB, PERTURBATION, ANTIWEIGHTED, COMPARISON = 0, 1, 2, 3
CENTRAL, UPWIND2 = 0, 1


@njit(cache=True, inline="always")
def _secant(phi, pe, u, a):
    """(b(phi + u) - b(phi)) / u given pe = p exp(-a phi)."""
    x = -a * u
    if x == 0.0:
        return pe * (1.0 - a * phi)
    em = math.expm1(x)
    return pe * (-a * phi * em / x + em + 1.0)


@njit(cache=True)
def step(u, new, past, base, w, exact, kind, prm, phi_s, pe, e_up, cd, ca, dt, scheme, adv,
         left, right):
    """One explicit Euler step; returns (max delay-bound excess, all finite).

    ``past`` is the padded snapshot at t - r: ghost values, the grid values,
    then one copy of the right end value. The delayed value at node i is
    past[base + i] when the shift is whole cells, else the cubic combination
    of past[base + i - 1 .. base + i + 2] with weights ``w``.
    prm = (delta, p, a, a1, k2, damp) and pe = p exp(-a phi_s).
    """
    n = u.shape[0]
    excess = -np.inf
    finite = True
    delta, p, a, a1, k2, damp = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5]
    for i in range(1, n - 1):
        j = base + i
        if exact:
            ud = past[j]
        else:
            ud = w[0] * past[j - 1] + w[1] * past[j] + w[2] * past[j + 1] + w[3] * past[j + 2]
        ui = u[i]
        if kind == LAB:
            src = -delta * ui + p * ud * math.exp(-a * ud)
        elif kind == PERTURBATION:
            src = -delta * ui + _secant(phi_s[i], pe[i], ud, a) * ud
        elif kind == ANTIWEIGHTED:
            us = 0.0 if ud == 0.0 else ud * e_up[i]
            ds = damp * _secant(phi_s[i], pe[i], us, a) * ud
            ex = abs(ds) - k2 * abs(ud) * (1 + 1e-12)
            if ex > excess:
                excess = ex
            src = -a1 * ui + ds
        else:
            src = -a1 * ui + k2 * ud
        v = ui + cd * (u[i + 1] - 2 * ui + u[i - 1]) + dt * src
        if adv != 0.0:
            if scheme == CENTRAL:
                v -= ca * (u[i + 1] - u[i - 1])
            elif adv > 0:
                if i >= 2:
                    v -= ca * (3 * ui - 4 * u[i - 1] + u[i - 2])
                else:
                    v -= 2 * ca * (ui - u[i - 1])
            else:
                if i <= n - 3:
                    v -= ca * (-3 * ui + 4 * u[i + 1] - u[i + 2])
                else:
                    v -= 2 * ca * (u[i + 1] - ui)
        if not math.isfinite(v):
            finite = False
        new[i] = v
    new[0] = left
    new[n - 1] = right
    return excess, finite


@njit(cache=True)
def min_gap(up, ut):
    """(min of up - |ut|, argmin)."""
    best = np.inf
    idx = -1
    for i in range(up.shape[0]):
        g = up[i] - abs(ut[i])
        if g < best:
            best = g
            idx = i
    return best, idx


@njit(cache=True)
def sup_abs_split(u, split):
    """(sup |u| over all, over [0, split), over [split, n))."""
    s_all = 0.0
    s_lo = 0.0
    s_hi = 0.0
    for i in range(u.shape[0]):
        v = abs(u[i])
        if v > s_all:
            s_all = v
        if i < split:
            if v > s_lo:
                s_lo = v
        elif v > s_hi:
            s_hi = v
    return s_all, s_lo, s_hi
