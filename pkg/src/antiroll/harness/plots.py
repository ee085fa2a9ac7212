"""Run-comparison figures: limit ratio, speed, and steering over time.

All figures are written as SVG with a fixed hash salt and stripped
creation date, so the same runs always produce the same bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .loop import RunResult  # noqa: E402

__all__ = ["emit_plots"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
_FIGSIZE = (8.0, 4.0)


def _new_axes(title: str, ylabel: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=100)
    ax.set_title(title)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _ltr_figure(runs: Sequence[RunResult], path: Path) -> None:
    fig, ax = _new_axes("Load transfer ratio", "LTR [-]")
    for limit in (1.0, -1.0):
        ax.axhline(limit, color="black", linestyle="--", linewidth=1.0)
    for idx, run in enumerate(runs):
        color = _COLORS[idx % len(_COLORS)]
        ltr = run.log.y[:, 0]
        ax.plot(run.time_s, ltr, color=color, linewidth=1.2, label=run.label)
        over = np.flatnonzero(np.abs(ltr) > 1.0)
        if over.size:
            first = over[0]
            t, val = float(run.time_s[first]), float(ltr[first])
            ax.plot([t], [val], marker="o", color=color, markersize=5)
            ax.annotate(f"{run.label}: limit crossed at {t:.2f} s",
                        xy=(t, val), xytext=(t, val + 0.18 * np.sign(val)),
                        fontsize=8, color=color)
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, path)


def _speed_figure(runs: Sequence[RunResult], path: Path) -> None:
    fig, ax = _new_axes("Longitudinal speed", "speed [km/h]")
    bounds = set()
    for run in runs:
        lo, hi = float(run.input_lower[1]), float(run.input_upper[1])
        if np.isfinite(lo):
            bounds.add(lo)
        if np.isfinite(hi):
            bounds.add(hi)
    for bound in sorted(bounds):
        ax.axhline(bound, color="black", linestyle="--", linewidth=1.0)
    for idx, run in enumerate(runs):
        color = _COLORS[idx % len(_COLORS)]
        ax.plot(run.time_s, run.speed_kmh, color=color, linewidth=1.2,
                label=run.label)
    ax.legend(loc="lower left", fontsize=8)
    _save(fig, path)


def _steering_figure(runs: Sequence[RunResult], path: Path) -> None:
    fig, ax = _new_axes("Steering wheel angle", "angle [deg]")
    for idx, run in enumerate(runs):
        color = _COLORS[idx % len(_COLORS)]
        ax.plot(run.time_s, run.log.u[:, 0], color=color, linewidth=1.2,
                label=run.label)
        ax.plot(run.time_s, run.steer_ref_deg, color=color, linewidth=0.8,
                linestyle=":", alpha=0.8, label=f"{run.label} reference")
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, path)


def emit_plots(runs: Sequence[RunResult], out_dir: str | Path,
               stem: str = "comparison") -> list[Path]:
    """Write the three comparison figures and return their paths.

    Every run must carry at least one sample; nothing is written when
    validation fails.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to plot")
    for run in runs:
        if run.log.length == 0:
            raise ValueError(f"run {run.label!r} has an empty log")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "antiroll"}):
        paths = [out / f"{stem}-ltr.svg", out / f"{stem}-speed.svg",
                 out / f"{stem}-steering.svg"]
        _ltr_figure(runs, paths[0])
        _speed_figure(runs, paths[1])
        _steering_figure(runs, paths[2])
    return paths
