"""Static SVG plots of sweep tables: bitrate and loss rate against the axis."""

from __future__ import annotations

import os
from collections import OrderedDict
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import SweepRow  # noqa: E402

AXIS_LABELS = {"t_B": "initial buffer time t_B (s)", "s_min": "minimal frame size s_min (Mb)"}
METRICS = {
    "bitrate": ("avg_bitrate", "average bitrate (Mbps)"),
    "loss": ("loss_rate", "loss rate"),
}


def _series(rows: Sequence[SweepRow]):
    out: OrderedDict[str, list[SweepRow]] = OrderedDict()
    for r in rows:
        out.setdefault(r.controller, []).append(r)
    for name in out:
        out[name].sort(key=lambda r: r.value)
    return out


def plot_table(rows: Sequence[SweepRow], out_dir, network: str, epsilon: float = 0.05) -> list[str]:
    """Write ``{network}_{axis}_{metric}.svg`` for every axis in ``rows``."""
    if not rows:
        raise ValueError("empty table")
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"cannot write to {out_dir}")
    written = []
    axes = list(OrderedDict.fromkeys(r.axis for r in rows))
    with plt.rc_context({"svg.hashsalt": "uplinkq", "svg.fonttype": "none"}):
        for axis in axes:
            series = _series([r for r in rows if r.axis == axis])
            for metric, (attr, ylabel) in METRICS.items():
                fig, ax = plt.subplots(figsize=(5, 4))
                for name, pts in series.items():
                    ax.plot([p.value for p in pts], [getattr(p, attr) for p in pts],
                            marker="o", markersize=3, label=name)
                if metric == "loss":
                    ax.axhline(epsilon, color="grey", linestyle="--", linewidth=1,
                               label=f"target {epsilon:g}")
                ax.set_xlabel(AXIS_LABELS.get(axis, axis))
                ax.set_ylabel(ylabel)
                ax.set_title(f"{network}: {ylabel} vs {axis}")
                ax.legend(fontsize=7)
                fig.tight_layout()
                path = os.path.join(out_dir, f"{network}_{axis}_{metric}.svg")
                fig.savefig(path, format="svg", metadata={"Date": None})
                plt.close(fig)
                written.append(path)
    return written
