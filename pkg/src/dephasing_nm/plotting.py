"""Matplotlib renderings of the CLI tables.

Figures are written to files next to the delimited output; nothing is
shown interactively.
"""

import math
from contextlib import contextmanager

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "font.size": 11,
    "axes.labelsize": 12,
    "legend.fontsize": 10,
    "lines.linewidth": 1.6,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def figure_size(width=6.0):
    golden = (math.sqrt(5) - 1.0) / 2.0
    return (width, width * golden)


@contextmanager
def styled_figure(width=6.0):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=figure_size(width))
        try:
            yield fig, ax
        finally:
            plt.close(fig)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    return path


def plot_trace(rows, path, title=None):
    """Trace distance and quantum capacity against time."""
    tau = [r["tau"] for r in rows]
    with styled_figure() as (fig, ax):
        ax.plot(tau, [r["trace_distance"] for r in rows], label=r"$D(\tau)$")
        ax.plot(tau, [r["quantum_capacity"] for r in rows], "--", label=r"$C_Q(\tau)$")
        ax.set_xlabel(r"$\tau$")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_measure(rows, path, param_label, log_x=False):
    """BLP and BCM measures against the swept parameter (log y)."""
    x = [r["param"] for r in rows]
    with styled_figure() as (fig, ax):
        for key, style, label in (("n_blp", "o-", r"$N_{BLP}$"), ("n_bcm", "s--", r"$N_{BCM}$")):
            y = [r[key] if r[key] and r[key] > 0 else float("nan") for r in rows]
            ax.plot(x, y, style, ms=3, label=label)
        ax.set_yscale("log")
        if log_x:
            ax.set_xscale("log")
        ax.set_xlabel(param_label)
        ax.legend()
        return _save(fig, path)


def plot_validation(rows, path):
    """Monte Carlo means with 3-sigma bars over the reference kernel."""
    tau = [r["tau"] for r in rows]
    with styled_figure() as (fig, ax):
        ax.errorbar(tau, [r["mc_mean"] for r in rows],
                    yerr=[3 * r["mc_stderr"] for r in rows], fmt="o", ms=3,
                    capsize=2, label="Monte Carlo (3 s.e.)")
        ax.plot(tau, [r["reference"] for r in rows], "-", label="reference")
        ax.set_xlabel(r"$\tau$")
        ax.set_ylabel(r"$\langle e^{2i\varphi}\rangle$")
        ax.legend()
        return _save(fig, path)


def plot_closed_forms(rows, path):
    g = [r["gamma"] for r in rows]
    with styled_figure() as (fig, ax):
        for key, style, label in (("blp_closed", "-", "BLP closed"),
                                  ("blp_numeric", "o", "BLP numeric"),
                                  ("bcm_series", "--", "BCM series"),
                                  ("bcm_numeric", "s", "BCM numeric")):
            y = [r[key] if r[key] and r[key] > 0 else float("nan") for r in rows]
            ax.plot(g, y, style, ms=4, label=label)
        ax.set_yscale("log")
        ax.set_xlabel(r"$\gamma$")
        ax.legend()
        return _save(fig, path)
