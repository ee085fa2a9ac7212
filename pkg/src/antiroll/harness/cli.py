"""Command-line front end for the benchmark harness.

Subcommands cover the full experimental pipeline: record excited
driving data, assemble (optionally reduced) data libraries, identify
state-space models, execute closed-loop runs, compare controllers, and
render figures from persisted runs.

Exit codes for ``run``: 0 on a clean run, 2 when the run completed but
the limit was violated, 3 on rollover, 4 when the solver failed and the
controller had to fall back.  ``compare`` returns the worst code among
its runs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..control import identify_state_space, save_model
from ..data import ExcitationConfig, TrajectoryLog
from .controllers import build_library
from .loop import (DEFAULT_COLLECT_SAMPLES, DEFAULT_EXCITATION_STDS,
                   collect_data, exit_code_for, load_run, run_closed_loop)
from .report import compare
from .plots import emit_plots
from .scenario import load_scenario, packaged_config

__all__ = ["main"]


def _scenario_path(value: str) -> Path:
    """Accept a file path or the bare name of a packaged scenario."""
    path = Path(value)
    if path.is_file():
        return path
    if "/" not in value and "\\" not in value:
        try:
            return packaged_config(f"scenarios/{value}.cfg")
        except FileNotFoundError:
            pass
    raise FileNotFoundError(f"no scenario file or packaged scenario {value!r}")


def _load_scenario_args(args) -> "ScenarioConfig":
    return load_scenario(
        _scenario_path(args.scenario),
        seed=args.seed,
        output_dir=args.out,
        library=getattr(args, "library", None),
        model=getattr(args, "model", None),
        reduce_q=getattr(args, "reduce", None))


def _cmd_collect(args) -> int:
    scenario = _load_scenario_args(args)
    stds = (args.excite_steer, args.excite_speed)
    excitation = ExcitationConfig(stds=stds, seed=scenario.seed)
    record = collect_data(scenario, excitation, samples=args.samples)
    print(f"collected {record.length} samples -> {scenario.output_dir}")
    return 0


def _cmd_build_lib(args) -> int:
    logs = [TrajectoryLog.from_csv(p) for p in args.log]
    lib = build_library(logs, t_ini=args.t_ini, horizon=args.horizon,
                        reduce_q=args.reduce, out_path=args.out,
                        seed=args.seed)
    kind = "reduced" if args.reduce is not None else "full"
    print(f"built {kind} library with {lib.n_columns} columns -> {args.out}")
    return 0


def _cmd_identify(args) -> int:
    logs = [TrajectoryLog.from_csv(p) for p in args.log]
    model = identify_state_space(logs, order=args.order)
    save_model(model, args.out)
    fit = model.fit
    print(f"identified order-{model.order} model "
          f"(held-out NRMS {fit.nrms_max:.4f}) -> {args.out}")
    return 0


def _cmd_run(args) -> int:
    scenario = _load_scenario_args(args)
    result = run_closed_loop(scenario)
    metrics = result.metrics
    print(f"{scenario.name}: cost {metrics.closed_loop_cost:.4f}, "
          f"peak |LTR| {metrics.ltr_peak:.3f}, "
          f"violations {metrics.violation_count}, "
          f"rollover {'yes' if metrics.rollover else 'no'}, "
          f"mean speed {metrics.mean_speed_kmh:.2f} km/h")
    return exit_code_for(result)


def _cmd_compare(args) -> int:
    scenarios = [load_scenario(_scenario_path(v), seed=args.seed)
                 for v in args.scenario]
    report = compare(scenarios, out_dir=args.out)
    print(report.text, end="")
    return max(exit_code_for(result) for result in report.results)


def _cmd_plot(args) -> int:
    runs = [load_run(d) for d in args.run]
    paths = emit_plots(runs, out_dir=args.out, stem=args.stem)
    for path in paths:
        print(path)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antiroll",
        description="rollover-prevention control benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(cmd, with_artifacts: bool = False):
        cmd.add_argument("--scenario", required=True,
                         help="scenario file path or packaged scenario name")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the scenario seed")
        cmd.add_argument("--out", default=None,
                         help="override the scenario output directory")
        if with_artifacts:
            cmd.add_argument("--library", default=None,
                             help="override the data-library file")
            cmd.add_argument("--model", default=None,
                             help="override the identified-model file")
            cmd.add_argument("--reduce", type=int, default=None, metavar="Q",
                             help="reduce the library to Q columns")

    collect = sub.add_parser("collect", help="record excited driving data")
    add_scenario_flags(collect)
    collect.add_argument("--samples", type=int,
                         default=DEFAULT_COLLECT_SAMPLES)
    collect.add_argument("--excite-steer", type=float,
                         default=DEFAULT_EXCITATION_STDS[0],
                         help="steering dither std [deg]")
    collect.add_argument("--excite-speed", type=float,
                         default=DEFAULT_EXCITATION_STDS[1],
                         help="speed dither std [km/h]")
    collect.set_defaults(func=_cmd_collect)

    build = sub.add_parser("build-lib", help="assemble a data library")
    build.add_argument("--log", action="append", required=True,
                       help="log CSV (repeat to concatenate recordings)")
    build.add_argument("--out", required=True, help="library output file")
    build.add_argument("--t-ini", type=int, default=100)
    build.add_argument("--horizon", type=int, default=100)
    build.add_argument("--reduce", type=int, default=None, metavar="Q")
    build.add_argument("--seed", type=int, default=None,
                       help="seed recorded in the library header")
    build.set_defaults(func=_cmd_build_lib)

    ident = sub.add_parser("identify", help="fit a state-space model")
    ident.add_argument("--log", action="append", required=True)
    ident.add_argument("--order", type=int, default=6)
    ident.add_argument("--out", required=True, help="model output file (.npz)")
    ident.set_defaults(func=_cmd_identify)

    run = sub.add_parser("run", help="execute one closed-loop scenario")
    add_scenario_flags(run, with_artifacts=True)
    run.set_defaults(func=_cmd_run)

    cmp_cmd = sub.add_parser("compare", help="run scenarios side by side")
    cmp_cmd.add_argument("--scenario", action="append", required=True,
                         help="scenario file or packaged name (repeat)")
    cmp_cmd.add_argument("--seed", type=int, default=None)
    cmp_cmd.add_argument("--out", default=None,
                         help="directory for compare.csv / compare.txt")
    cmp_cmd.set_defaults(func=_cmd_compare)

    plot = sub.add_parser("plot", help="render figures from persisted runs")
    plot.add_argument("--run", action="append", required=True,
                      help="run directory (repeat to overlay)")
    plot.add_argument("--out", required=True, help="figure output directory")
    plot.add_argument("--stem", default="comparison",
                      help="file-name stem for the figures")
    plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
