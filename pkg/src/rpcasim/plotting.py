"""Matplotlib rendering of sweep results to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_AXIS_LABELS = {
    "p_source": "source transmit power (dBm)",
    "t_data": "coherence / data time (us)",
    "p0": "contention probability",
}

_STYLE = {
    "rpca": dict(color="tab:red", marker="o"),
    "optimal_stop_probe": dict(color="tab:blue", marker="s"),
    "mu_rsu": dict(color="tab:green", marker="^"),
    "direct_rsu": dict(color="tab:orange", marker="v"),
    "direct_v2v": dict(color="tab:gray", marker="x"),
}


def render_sweep(aggregates: dict, axis_name: str, out_path, title: str = "") -> None:
    """Plot mean throughput with 95% CI error bars per strategy.

    ``aggregates`` maps strategy name -> list of (axis_value, mean, ci).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for name, rows in aggregates.items():
        rows = sorted(rows)
        xs = [r[0] for r in rows]
        ys = [r[1] for r in rows]
        es = [r[2] for r in rows]
        style = _STYLE.get(name, {})
        ax.errorbar(xs, ys, yerr=es, label=name, capsize=3, **style)
    ax.set_xlabel(_AXIS_LABELS.get(axis_name, axis_name))
    ax.set_ylabel("throughput (bits/s)")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
