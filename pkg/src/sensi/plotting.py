"""Figures rendered next to the plot-data CSVs."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sensi.outputs import atomic_write_bytes  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    buf = io.BytesIO()
    # no Software/date metadata so reruns give identical bytes
    fig.savefig(buf, format="png", dpi=150, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return atomic_write_bytes(path, buf.getvalue())


def plot_morris_vs_delta(deltas, series: dict, path, absolute=False):
    """Scaled Morris index against delta, one line per age group."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        x = np.asarray(deltas, dtype=float)
        for label, values in series.items():
            ax.plot(x, values, marker="o", markersize=3, linewidth=1, label=label)
        ax.axvline(0.0, color="0.7", linewidth=0.6)
        ax.set_xlabel("delta")
        ax.set_ylabel("scaled Morris index" + (" (absolute)" if absolute else ""))
        ax.ticklabel_format(axis="both", style="sci", scilimits=(-3, 3))
        ax.legend(title="age group", ncol=2, frameon=False)
        return _save(fig, path)


def plot_weekly_cases(weeks, series: dict, path):
    """Weekly case counts per age group."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        x = np.asarray(weeks, dtype="datetime64[D]")
        for label, values in series.items():
            ax.plot(x, values, linewidth=1, label=label)
        ax.set_xlabel("week")
        ax.set_ylabel("cases")
        ax.legend(title="age group", ncol=2, frameon=False)
        fig.autofmt_xdate()
        return _save(fig, path)
