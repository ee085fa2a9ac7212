"""Side-by-side controller comparison over a list of scenarios.

Runs execute in parallel worker threads (each run is internally
sequential), and the table costs are recomputed from the artifacts each
run persisted, never from hidden in-memory state.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .loop import RunResult, load_run, run_closed_loop
from .scenario import ScenarioConfig, load_controller_profile

__all__ = ["ComparisonReport", "compare"]

_COLUMNS = ("scenario", "controller", "cost", "time_per_step_s",
            "violations", "rollover", "mean_speed_kmh")


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[dict]
    text: str
    results: list[RunResult]
    csv_path: Path | None = None
    text_path: Path | None = None


def _check_shared_weights(scenarios: Sequence[ScenarioConfig]) -> None:
    profiles = [load_controller_profile(s.controller_file) for s in scenarios]
    first = profiles[0].control
    for scenario, profile in zip(scenarios[1:], profiles[1:]):
        cfg = profile.control
        same = (np.array_equal(cfg.input_weights, first.input_weights)
                and np.array_equal(cfg.output_weights, first.output_weights))
        if not same:
            raise ValueError(
                f"scenario {scenario.name!r} uses different weights; "
                "costs would not be comparable")


def _format_table(rows: list[dict]) -> str:
    cells = [[str(col) for col in _COLUMNS]]
    for row in rows:
        cells.append([
            row["scenario"], row["controller"], f"{row['cost']:.4f}",
            f"{row['time_per_step_s']:.6f}", str(row["violations"]),
            "yes" if row["rollover"] else "no",
            f"{row['mean_speed_kmh']:.2f}"])
    widths = [max(len(line[i]) for line in cells) for i in range(len(_COLUMNS))]
    lines = []
    for n, line in enumerate(cells):
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(line, widths)))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def compare(scenarios: Sequence[ScenarioConfig],
            out_dir: str | Path | None = None,
            results: Sequence[RunResult] | None = None,
            max_workers: int | None = None) -> ComparisonReport:
    """Run the scenarios (unless given results) and tabulate them.

    All scenarios must share the cost weights.  Each row's cost is
    recomputed from the run's persisted trace so the table can always be
    audited against the files on disk.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("need at least one scenario")
    _check_shared_weights(scenarios)
    if results is None:
        workers = max_workers if max_workers is not None else len(scenarios)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda s: run_closed_loop(s, persist=True), scenarios))
    else:
        results = list(results)
        if len(results) != len(scenarios):
            raise ValueError("one result required per scenario")

    rows = []
    for scenario, result in zip(scenarios, results):
        replay = load_run(scenario.output_dir)
        rows.append({
            "scenario": scenario.name,
            "controller": result.label,
            "cost": replay.recompute_cost(),
            "time_per_step_s": result.metrics.solve_time_median_s,
            "violations": result.metrics.violation_count,
            "rollover": result.metrics.rollover,
            "mean_speed_kmh": result.metrics.mean_speed_kmh,
        })
    text = _format_table(rows)
    csv_path = text_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "compare.csv"
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_COLUMNS)
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        text_path = out / "compare.txt"
        text_path.write_text(text, encoding="utf-8")
    return ComparisonReport(rows=rows, text=text, results=list(results),
                            csv_path=csv_path, text_path=text_path)
