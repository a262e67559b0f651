"""Matplotlib figures written next to the tables.

Figures go through the Agg backend with fixed metadata so reruns produce
identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import COLUMN_TITLES  # noqa: E402

COLORS = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"]
MARKERS = ["o", "s", "^", "v", "D", "x"]
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def ablation_lines(labels, rows, columns, path, title=""):
    """One panel per metric, grid setting on the x axis."""
    fig, axes = plt.subplots(1, len(columns), figsize=(3.2 * len(columns), 3.0), squeeze=False)
    x = np.arange(len(labels))
    for i, (ax, col) in enumerate(zip(axes[0], columns)):
        ys = [row.get(col) for row in rows]
        ys = [np.nan if y is None else y for y in ys]
        ax.plot(x, ys, marker=MARKERS[i % len(MARKERS)], color=COLORS[i % len(COLORS)])
        ax.set_xticks(x)
        ax.set_xticklabels(labels)
        ax.set_title(COLUMN_TITLES.get(col, col), fontsize=10)
        ax.grid(alpha=0.3)
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    return _save(fig, path)


def metric_distributions(report_rows, columns, path, title=""):
    """Box plot of per-image metric values."""
    data = []
    names = []
    for col in columns:
        vals = [r[col] for r in report_rows if r.get(col) is not None]
        if vals:
            data.append(vals)
            names.append(COLUMN_TITLES.get(col, col))
    fig, ax = plt.subplots(figsize=(1.4 * max(len(data), 2) + 1.5, 3.2))
    if data:
        ax.boxplot(data)
        ax.set_xticks(np.arange(1, len(names) + 1))
        ax.set_xticklabels(names)
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3, axis="y")
    if title:
        ax.set_title(title, fontsize=11)
    fig.tight_layout()
    return _save(fig, path)


def subband_panel(subbands: dict, path, title=""):
    """LL/LH/HL/HH side by side, each affinely stretched for viewing."""
    fig, axes = plt.subplots(1, len(subbands), figsize=(2.6 * len(subbands), 2.8))
    for ax, (name, plane) in zip(np.atleast_1d(axes), subbands.items()):
        ax.imshow(stretch(plane), cmap="gray", vmin=0, vmax=1, interpolation="nearest")
        ax.set_title(name, fontsize=10)
        ax.axis("off")
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    return _save(fig, path)


def stretch(plane) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    lo, hi = plane.min(), plane.max()
    if hi <= lo:
        return np.zeros_like(plane)
    return (plane - lo) / (hi - lo)
