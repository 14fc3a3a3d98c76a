"""CSV / JSON result files."""

from __future__ import annotations

import csv
import json
from importlib import metadata
from pathlib import Path

import numpy as np

from .simulation import AggregateStats

SCATTER_HEADER = ["scheme", "omega", "total_power_w", "mean_throughput_mbps"]


def version_string() -> str:
    try:
        v = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__ as v
    return f"d2dsim-{v}"


def _num(x) -> str:
    return format(float(x), ".10g")


def write_cdf(path, samples: np.ndarray) -> None:
    """``sinr_db,cdf`` with one row per sorted sample."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sinr_db", "cdf"])
        for k, v in enumerate(x, start=1):
            w.writerow([_num(v), _num(k / n)])


def scatter_row(scheme: str, omega, stats: AggregateStats) -> list:
    s = stats.summary()
    return [scheme, "" if omega is None else _num(omega),
            "" if s["mean_total_power_w"] is None else _num(s["mean_total_power_w"]),
            "" if s["mean_throughput_mbps"] is None else _num(s["mean_throughput_mbps"])]


def write_scatter(path, rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCATTER_HEADER)
        for row in rows:
            if row[2] != "":
                w.writerow(row)


def emit_outputs(stats: AggregateStats, out_dir, config_echo: dict | None = None,
                 scheme: str = "", omega=None) -> list[Path]:
    """Write the CDFs, the power/throughput point and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for cls in sorted(stats.sinr_db):
        path = out / f"sinr_cdf_{cls}.csv"
        write_cdf(path, stats.sinr_db[cls])
        written.append(path)
    path = out / "scatter_power_rate.csv"
    write_scatter(path, [scatter_row(scheme, omega, stats)])
    written.append(path)
    summary = {"version": version_string(), "summary": stats.summary(),
               "config": config_echo or {}, "seed": (config_echo or {}).get("seed")}
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
