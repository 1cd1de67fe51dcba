"""Least-squares decay-rate estimation on log-transformed time series."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import FitError

MIN_SAMPLES = 30
MODELS = ("algebraic", "exponential", "mixed", "algebraic_exponential")


@dataclass(frozen=True)
class RateFit:
    """Fitted decay law of a positive series y(t).

    ``alg_exponent`` is alpha in y ~ C t^alpha (fixed at -1/2 for the mixed
    model), ``exp_rate`` is mu in y ~ C e^{-mu t}. Unused parameters are NaN.
    Sigmas are one-standard-error estimates from the least-squares fit.
    """

    model: str
    alg_exponent: float
    exp_rate: float
    log_C: float
    r_squared: float
    window: tuple
    alg_sigma: float = float("nan")
    exp_sigma: float = float("nan")
    n_samples: int = 0

    @property
    def C(self) -> float:
        return math.exp(self.log_C)

    def as_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        d["C"] = self.C
        return d


def _window(t, y, window):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise FitError("t and y must have equal length")
    lo, hi = (t.min(), t.max()) if window is None else window
    sel = (t >= lo) & (t <= hi)
    ts, ys = t[sel], y[sel]
    if ts.size < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples in window, got {ts.size}")
    if np.any(~np.isfinite(ys)) or np.any(ys <= 0):
        raise FitError("fit window contains non-positive or non-finite values")
    return ts, ys, (float(lo), float(hi))


def fit_decay(t, y, model: str = "algebraic", window=None) -> RateFit:
    """Fit log y by linear least squares.

    algebraic:   log y = log C + alpha log t
    exponential: log y = log C - mu t
    mixed:       log y = log C - 1/2 log t - mu t
    algebraic_exponential: log y = log C + alpha log t - mu t
    """
    if model not in MODELS:
        raise FitError(f"unknown model {model!r}")
    ts, ys, win = _window(t, y, window)
    if model in ("algebraic", "mixed", "algebraic_exponential") and np.any(ts <= 0):
        raise FitError("algebraic models need t > 0")
    target = np.log(ys)
    if model == "mixed":
        target = target + 0.5 * np.log(ts)
    cols = [np.ones_like(ts)]
    if model in ("algebraic", "algebraic_exponential"):
        cols.append(np.log(ts))
    if model in ("exponential", "mixed", "algebraic_exponential"):
        cols.append(-ts)
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ coef
    dof = max(1, ts.size - X.shape[1])
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.pinv(X.T @ X)
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))

    # R^2 on log y itself so the mixed model is comparable with the others
    logy = np.log(ys)
    pred = X @ coef - (0.5 * np.log(ts) if model == "mixed" else 0.0)
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    tiny = 1e-24 * logy.size * max(1.0, float(np.max(np.abs(logy)))) ** 2
    if ss_tot > tiny:
        r2 = 1.0 - ss_res / ss_tot
    else:
        # flat series: perfect iff the model reproduces it to round-off
        r2 = 1.0 if ss_res <= tiny else 0.0
    r2 = min(1.0, max(0.0, r2))

    nan = float("nan")
    alpha = mu = nan
    a_sig = m_sig = nan
    if model == "algebraic":
        alpha, a_sig = coef[1], sig[1]
    elif model == "exponential":
        mu, m_sig = coef[1], sig[1]
    elif model == "mixed":
        alpha, mu, m_sig = -0.5, coef[1], sig[1]
    else:
        alpha, a_sig, mu, m_sig = coef[1], sig[1], coef[2], sig[2]
    return RateFit(model, float(alpha), float(mu), float(coef[0]), r2, win,
                   float(a_sig), float(m_sig), int(ts.size))
