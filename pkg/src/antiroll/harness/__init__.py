"""Benchmark harness: scenarios, closed-loop runs, comparison, figures."""

from .controllers import build_controller, build_library
from .loop import (RunMetrics, RunResult, collect_data, exit_code_for,
                   load_run, run_closed_loop)
from .plots import emit_plots
from .report import ComparisonReport, compare
from .scenario import (ControllerProfile, ScenarioConfig,
                       load_controller_profile, load_scenario, packaged_config)

__all__ = [
    "ComparisonReport",
    "ControllerProfile",
    "RunMetrics",
    "RunResult",
    "ScenarioConfig",
    "build_controller",
    "build_library",
    "collect_data",
    "compare",
    "emit_plots",
    "exit_code_for",
    "load_controller_profile",
    "load_run",
    "load_scenario",
    "packaged_config",
]
