"""PNG renderings of CLI outputs. The CSV files stay the source of truth."""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def line_plot(path, x, ys: dict, *, xlabel="", ylabel="", title="", logx=False, logy=False,
              hline=None):
    """One panel with a line per entry of ``ys``; non-positive values dropped on log axes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    x = np.asarray(x, dtype=float)
    for label, y in ys.items():
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(y)
        if logy:
            keep &= y > 0
        if logx:
            keep &= x > 0
        ax.plot(x[keep], y[keep], label=label, lw=1.2)
    if hline is not None:
        ax.axhline(hline, color="0.5", ls="--", lw=0.8)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(ys) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def snapshot_plot(path, xi, times, values, *, xlabel="xi", ylabel="value", title="", max_lines=8):
    """A few evenly chosen snapshots of a field on one axis."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    idx = np.unique(np.linspace(0, len(times) - 1, min(max_lines, len(times))).astype(int))
    cmap = plt.get_cmap("viridis")
    for k, i in enumerate(idx):
        ax.plot(xi, values[i], color=cmap(k / max(1, len(idx) - 1)), lw=1.0,
                label=f"t = {times[i]:.4g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def phase_map(path, rows):
    """Scatter of sweep cells coloured by theoretical shape, marked by numerical agreement."""
    plt = _pyplot()
    colours = {"Monotone": "tab:blue", "Oscillatory": "tab:orange", "NoWave": "0.6",
               "Ambiguous": "tab:purple"}
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    for row in rows:
        marker = "o" if row["agree"] else "x"
        ax.scatter(row["r"], row["c_factor"], c=colours.get(row["theory"], "k"), marker=marker,
                   s=60)
    for name, col in colours.items():
        ax.scatter([], [], c=col, label=name)
    ax.set_xlabel("r")
    ax.set_ylabel("c / c*")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
