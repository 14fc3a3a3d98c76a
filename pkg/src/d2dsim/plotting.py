"""Figure rendering for the CSV/JSON reports.

Uses the object-oriented matplotlib API with the Agg canvas so nothing
touches pyplot state. PNGs are written without the software tag, which
keeps reruns byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_STYLE = {"cellular": "--", "d2d": "-"}


def _new_figure(width=6.4, height=4.4):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    return path


def plot_sinr_cdfs(curves: Mapping[str, Mapping[str, np.ndarray]], path,
                   title: str = "") -> Path:
    """One CDF line per (label, entity class); ``curves[label][cls]`` are SINR samples."""
    fig, ax = _new_figure()
    for label, by_cls in curves.items():
        for cls, x in sorted(by_cls.items()):
            if len(x) == 0:
                continue
            x = np.sort(x)
            y = np.arange(1, len(x) + 1) / len(x)
            name = label if cls == "d2d" else f"{label}-Cell"
            ax.step(x, y, where="post", linestyle=_STYLE.get(cls, ":"), label=name)
    ax.set_xlabel("SINR [dB]")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    if ax.lines:
        ax.legend(fontsize=8)
    return _save(fig, path)


def plot_power_rate(rows: Sequence[Sequence], path, title: str = "") -> Path:
    """Scatter of ``scatter_power_rate.csv`` rows, one annotated point per scheme."""
    fig, ax = _new_figure()
    for scheme, omega, power, thr in rows:
        if power in ("", None):
            continue
        power, thr = float(power), float(thr)
        label = f"{scheme.upper()}{omega}" if omega not in ("", None) else scheme.upper()
        ax.scatter([power], [thr], label=label)
        ax.annotate(f"({power:.2f},{thr:.2f})", (power, thr), fontsize=7,
                    xytext=(4, 4), textcoords="offset points")
    ax.set_xlabel("Total power consumption [W]")
    ax.set_ylabel("Average throughput [Mbps]")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    if ax.collections:
        ax.legend(fontsize=8)
    return _save(fig, path)
