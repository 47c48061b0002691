"""Figure output for decay tables."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import LogLocator  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "font.family": "sans-serif",
    "font.sans-serif": ["DejaVu Sans"],
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "lines.markersize": 4,
    "lines.linewidth": 1,
    # fixed ids and no timestamp so repeated runs give identical files
    "svg.hashsalt": "fockopa",
    "svg.fonttype": "path",
}


def decay_figure(table) -> str:
    """Log-log plot of ``c_n`` with the fitted slope line; returns SVG text."""
    ns = np.array([n for n, c in zip(table.ns, table.cs) if n >= 1 and c > 0], dtype=float)
    cs = np.array([c for n, c in zip(table.ns, table.cs) if n >= 1 and c > 0])
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        ax.loglog(ns, cs, "o-", color="#2b8cbe", label=r"$c_n$")
        lo, hi = table.window
        sel = (ns >= lo) & (ns <= hi)
        if np.isfinite(table.slope) and sel.sum() >= 2:
            x = ns[sel]
            b = np.mean(np.log(cs[sel]) - table.slope * np.log(x))
            ax.loglog(x, np.exp(b) * x ** table.slope, "--", color="#e34a33",
                      label=f"fit over [{lo}, {hi}]: slope {table.slope:.3f}")
        if table.p is not None:
            ax.set_title(f"{table.descriptor}   (theorem exponent p = {table.p:.4g})")
        elif table.descriptor:
            ax.set_title(table.descriptor)
        ax.xaxis.set_major_locator(LogLocator(base=10))
        ax.yaxis.set_major_locator(LogLocator(base=10))
        ax.set_xlabel("degree n")
        ax.set_ylabel(r"$\|P_n F - I\|_2^2$")
        ax.legend(loc="best")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()
