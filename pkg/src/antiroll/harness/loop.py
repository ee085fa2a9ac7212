"""Closed-loop experiment engine: data collection, benchmark runs, metrics.

One run wires the chain together at a fixed controller period: the
path-following driver produces the steering-wheel reference, the active
controller (if any) decides the applied steering and speed commands, the
speed governor turns the speed command into wheel torques, and the plant
integrates underneath at its own substep.  Every sample pair is logged
at the controller period, so the persisted artifacts replay the whole
experiment and all metrics can be recomputed from disk.

Sampling convention: the output sample paired with an input is the one
measured just before that input is applied.  Recorded logs, controller
history buffers, and the data libraries built from the logs all share
this pairing.
"""

from __future__ import annotations

import json
import logging
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..control import RecedingHorizonController, closed_loop_cost
from ..data import ExcitationConfig, TrajectoryLog, inject_excitation
from ..plant import (ActuatorCommand, Plant, PreviewDriver, SpeedGovernor,
                     TerrainProfile, VehicleState, dynamics_rhs, flat_terrain,
                     load_vehicle, riverbed_terrain, track_by_name)
from .controllers import build_controller
from .scenario import ControllerProfile, ScenarioConfig, load_controller_profile

log = logging.getLogger(__name__)

__all__ = ["RunMetrics", "RunResult", "collect_data", "exit_code_for",
           "load_run", "run_closed_loop"]

KMH = 3.6  # m/s -> km/h

DEFAULT_EXCITATION_STDS = (6.0, 3.0)  # steering wheel [deg], speed target [km/h]
DEFAULT_COLLECT_SAMPLES = 3200

TRACE_NAME = "trace.csv"
METRICS_NAME = "metrics.json"
TIMING_NAME = "timing.json"
LOG_NAME = "log.csv"
PROVENANCE_NAME = "provenance.json"

# exit codes shared with the command-line front end
EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_ROLLOVER = 3
EXIT_SOLVER_FAILURE = 4


@dataclass(frozen=True)
class RunMetrics:
    """Summary numbers of one closed-loop run.

    Solve-time statistics cover the controller's decision work only
    (constraint assembly plus the QP solve); plant integration and the
    driver model are excluded.  They are wall-clock measurements and
    therefore the only machine-dependent fields.
    """

    closed_loop_cost: float
    solve_time_mean_s: float
    solve_time_max_s: float
    solve_time_median_s: float
    ltr_peak: float
    violation_count: int
    rollover: bool
    mean_speed_kmh: float

    def __post_init__(self):
        if self.ltr_peak < 0:
            raise ValueError("peak |LTR| cannot be negative")
        if self.rollover and self.violation_count < 1:
            raise ValueError("a rollover implies at least one limit violation")

    def deterministic_dict(self) -> dict:
        """The fields that must reproduce byte-for-byte across runs."""
        return {
            "closed_loop_cost": self.closed_loop_cost,
            "ltr_peak": self.ltr_peak,
            "violation_count": self.violation_count,
            "rollover": self.rollover,
            "mean_speed_kmh": self.mean_speed_kmh,
        }


@dataclass(frozen=True)
class RunResult:
    """Everything one run produced, in memory."""

    label: str
    metrics: RunMetrics
    log: TrajectoryLog
    time_s: np.ndarray
    speed_kmh: np.ndarray
    steer_ref_deg: np.ndarray
    solve_ms: np.ndarray
    input_lower: np.ndarray
    input_upper: np.ndarray
    input_weights: np.ndarray
    output_weights: np.ndarray
    v_ref_kmh: float
    fallback_count: int
    scenario: ScenarioConfig | None = None

    @property
    def reference_inputs(self) -> np.ndarray:
        """Per-sample input reference: driver steering and target speed."""
        return np.column_stack([
            self.steer_ref_deg,
            np.full(self.steer_ref_deg.shape[0], self.v_ref_kmh)])

    def recompute_cost(self) -> float:
        return closed_loop_cost(self.log, self.reference_inputs,
                                np.zeros(self.log.n_outputs),
                                self.input_weights, self.output_weights)


def _terrain_for(scenario: ScenarioConfig) -> TerrainProfile:
    if scenario.terrain == "riverbed":
        return riverbed_terrain(seed=scenario.terrain_seed)
    return flat_terrain()


def _initial_ltr(state: VehicleState, terrain: TerrainProfile, params) -> float:
    cmd = ActuatorCommand(steer_rad=0.0, wheel_torques=np.zeros(4))
    _, info = dynamics_rhs(state, cmd, terrain, params)
    return float(info["ltr"])


def _solve_stats(solve_ms: np.ndarray) -> tuple[float, float, float]:
    if solve_ms.size == 0:
        return 0.0, 0.0, 0.0
    seconds = solve_ms / 1e3
    return (float(np.mean(seconds)), float(np.max(seconds)),
            float(statistics.median(seconds.tolist())))


def collect_data(scenario: ScenarioConfig,
                 excitation: ExcitationConfig | None = None,
                 samples: int = DEFAULT_COLLECT_SAMPLES,
                 persist: bool = True) -> TrajectoryLog:
    """Record an excited driver-model run for library building.

    The driver follows the scenario track at the scenario speed while
    seeded dither is added to both input channels; the log pairs each
    applied input with the output measured just before it.  With
    ``persist`` the log lands in the scenario output directory together
    with a provenance record.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    if excitation is None:
        excitation = ExcitationConfig(stds=DEFAULT_EXCITATION_STDS,
                                      seed=scenario.seed)
    params = load_vehicle(scenario.vehicle_file)
    track = track_by_name(scenario.track)
    terrain = _terrain_for(scenario)
    profile = load_controller_profile(scenario.controller_file)
    dt = profile.sample_period
    plant = Plant(params, terrain)
    driver = PreviewDriver(track, params)
    governor = SpeedGovernor(params)
    state = VehicleState.cruising(params, scenario.v_ref_kmh / KMH)

    dither = inject_excitation(np.zeros((samples, 2)), excitation)
    u_rec = np.empty((samples, 2))
    y_rec = np.empty(samples)
    y_now = _initial_ltr(state, terrain, params)
    for k in range(samples):
        steer_ref = driver.steering(state.x, state.y, state.heading,
                                    state.vx, dt)
        u_now = np.array([steer_ref, scenario.v_ref_kmh]) + dither[k]
        u_rec[k] = u_now
        y_rec[k] = y_now
        cmd = ActuatorCommand(
            steer_rad=math.radians(u_now[0] / params.steer_ratio),
            wheel_torques=governor.torques(state.vx, u_now[1], dt))
        state, info = plant.step(state, cmd, dt)
        if info.rolled:
            raise RuntimeError(
                f"data run rolled over at sample {k}; lower the speed or "
                "the excitation level")
        y_now = info.ltr

    record = TrajectoryLog(u=u_rec, y=y_rec[:, None], sample_period=dt)
    if persist:
        out = Path(scenario.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        record.to_csv(out / LOG_NAME)
        provenance = {
            "scenario": scenario.name,
            "vehicle": Path(scenario.vehicle_file).name,
            "track": scenario.track,
            "terrain": scenario.terrain,
            "terrain_seed": scenario.terrain_seed,
            "v_ref_kmh": scenario.v_ref_kmh,
            "samples": samples,
            "sample_period": dt,
            "excitation_stds": list(excitation.stds),
            "excitation_seed": excitation.seed,
            "content_hash": record.content_hash(),
        }
        with open(out / PROVENANCE_NAME, "w", encoding="utf-8") as fh:
            json.dump(provenance, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return record


def run_closed_loop(scenario: ScenarioConfig, persist: bool = True,
                    profile: ControllerProfile | None = None) -> RunResult:
    """Execute one benchmark run and summarize it.

    A rollover ends the run early; the metrics still cover everything up
    to the termination sample.  With ``persist`` the run writes its
    sample trace, deterministic metrics, and timing sidecar into the
    scenario output directory.
    """
    params = load_vehicle(scenario.vehicle_file)
    track = track_by_name(scenario.track)
    terrain = _terrain_for(scenario)
    if profile is None:
        profile = load_controller_profile(scenario.controller_file)
    cfg = profile.control
    controller = build_controller(scenario, profile)
    dt = profile.sample_period
    ticks = int(round(scenario.duration_s / dt))
    if ticks < 1:
        raise ValueError("duration shorter than one controller period")

    plant = Plant(params, terrain)
    driver = PreviewDriver(track, params)
    governor = SpeedGovernor(params)
    state = VehicleState.cruising(params, scenario.v_ref_kmh / KMH)

    u_rec = np.empty((ticks, 2))
    y_rec = np.empty(ticks)
    speed = np.empty(ticks)
    steer_ref = np.empty(ticks)
    solve_ms: list[float] = []
    ltr_extent = 0.0
    violations = 0
    fallbacks = 0
    rollover = False
    pending: list[np.ndarray] = []

    y_now = _initial_ltr(state, terrain, params)
    done = 0
    for k in range(ticks):
        ref = driver.steering(state.x, state.y, state.heading, state.vx, dt)
        steer_ref[k] = ref
        speed[k] = state.vx * KMH
        if controller is None:
            u_now = np.array([ref, scenario.v_ref_kmh])
        else:
            if not pending:
                decision = controller.decide(
                    u_ref=np.array([ref, scenario.v_ref_kmh]),
                    y_ref=np.zeros(1))
                pending = list(decision.inputs)
                if not decision.bootstrap:
                    solve_ms.append(decision.solve_ms)
                if decision.fallback:
                    fallbacks += 1
            u_now = pending.pop(0)
        u_rec[k] = u_now
        y_rec[k] = y_now
        abs_y = abs(y_now)
        ltr_extent = max(ltr_extent, abs_y)
        violations += abs_y > 1.0
        if controller is not None:
            controller.record(u_now, np.array([y_now]))
        cmd = ActuatorCommand(
            steer_rad=math.radians(u_now[0] / params.steer_ratio),
            wheel_torques=governor.torques(state.vx, u_now[1], dt))
        try:
            state, info = plant.step(state, cmd, dt)
        except FloatingPointError:
            log.warning("plant state diverged at t=%.2f s; treating as "
                        "rollover", k * dt)
            rollover = True
            done = k + 1
            break
        y_now = info.ltr
        done = k + 1
        if info.rolled:
            rollover = True
            # the terminal sample still counts toward the limit statistics
            abs_y = abs(y_now)
            ltr_extent = max(ltr_extent, abs_y)
            violations += abs_y > 1.0
            break
    else:
        abs_y = abs(y_now)
        ltr_extent = max(ltr_extent, abs_y)
        violations += abs_y > 1.0

    u_rec, y_rec = u_rec[:done], y_rec[:done]
    speed, steer_ref = speed[:done], steer_ref[:done]
    record = TrajectoryLog(u=u_rec, y=y_rec[:, None], sample_period=dt)
    times = np.asarray(solve_ms)
    mean_s, max_s, median_s = _solve_stats(times)
    refs = np.column_stack([steer_ref, np.full(done, scenario.v_ref_kmh)])
    cost = closed_loop_cost(record, refs, np.zeros(1),
                            cfg.input_weights, cfg.output_weights)
    metrics = RunMetrics(
        closed_loop_cost=cost,
        solve_time_mean_s=mean_s, solve_time_max_s=max_s,
        solve_time_median_s=median_s,
        ltr_peak=ltr_extent, violation_count=int(violations),
        rollover=rollover, mean_speed_kmh=float(np.mean(speed)))
    result = RunResult(
        label=scenario.controller, metrics=metrics, log=record,
        time_s=np.arange(done) * dt, speed_kmh=speed, steer_ref_deg=steer_ref,
        solve_ms=times, input_lower=cfg.input_lower[:2],
        input_upper=cfg.input_upper[:2], input_weights=cfg.input_weights,
        output_weights=cfg.output_weights, v_ref_kmh=scenario.v_ref_kmh,
        fallback_count=fallbacks, scenario=scenario)
    if persist:
        persist_run(result, scenario.output_dir)
    return result


def exit_code_for(result: RunResult) -> int:
    """Process exit code summarizing a run's outcome."""
    if result.metrics.rollover:
        return EXIT_ROLLOVER
    if result.fallback_count > 0:
        return EXIT_SOLVER_FAILURE
    if result.metrics.violation_count > 0:
        return EXIT_VIOLATION
    return EXIT_OK


def persist_run(result: RunResult, out_dir: str | Path) -> Path:
    """Write the trace, metrics, and timing files for one run.

    The trace and metrics files are byte-deterministic for a fixed
    configuration and seed; wall-clock solve times go into a separate
    timing sidecar so machine noise never touches the reproducible
    artifacts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace = out / TRACE_NAME
    with open(trace, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,steer_cmd_deg,speed_cmd_kmh,ltr,speed_kmh,steer_ref_deg\n")
        for k in range(result.log.length):
            row = (result.time_s[k], result.log.u[k, 0], result.log.u[k, 1],
                   result.log.y[k, 0], result.speed_kmh[k],
                   result.steer_ref_deg[k])
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    meta = {
        "label": result.label,
        "v_ref_kmh": result.v_ref_kmh,
        "input_lower": [float(v) for v in result.input_lower],
        "input_upper": [float(v) for v in result.input_upper],
        "input_weights": [float(v) for v in result.input_weights],
        "output_weights": [float(v) for v in result.output_weights],
        "fallback_count": result.fallback_count,
        "metrics": result.metrics.deterministic_dict(),
    }
    with open(out / METRICS_NAME, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    timing = {
        "solve_time_mean_s": result.metrics.solve_time_mean_s,
        "solve_time_max_s": result.metrics.solve_time_max_s,
        "solve_time_median_s": result.metrics.solve_time_median_s,
        "solve_ms": [float(v) for v in result.solve_ms],
    }
    with open(out / TIMING_NAME, "w", encoding="utf-8") as fh:
        json.dump(timing, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_run(run_dir: str | Path) -> RunResult:
    """Rebuild a :class:`RunResult` from a persisted run directory."""
    run_dir = Path(run_dir)
    data = np.genfromtxt(run_dir / TRACE_NAME, delimiter=",", names=True)
    data = np.atleast_1d(data)
    with open(run_dir / METRICS_NAME, encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(run_dir / TIMING_NAME, encoding="utf-8") as fh:
        timing = json.load(fh)
    u = np.column_stack([data["steer_cmd_deg"], data["speed_cmd_kmh"]])
    y = np.asarray(data["ltr"], dtype=float)[:, None]
    dt = float(data["t"][1] - data["t"][0]) if data.shape[0] > 1 else 0.01
    record = TrajectoryLog(u=u, y=y, sample_period=dt)
    stored = meta["metrics"]
    metrics = RunMetrics(
        closed_loop_cost=float(stored["closed_loop_cost"]),
        solve_time_mean_s=float(timing["solve_time_mean_s"]),
        solve_time_max_s=float(timing["solve_time_max_s"]),
        solve_time_median_s=float(timing["solve_time_median_s"]),
        ltr_peak=float(stored["ltr_peak"]),
        violation_count=int(stored["violation_count"]),
        rollover=bool(stored["rollover"]),
        mean_speed_kmh=float(stored["mean_speed_kmh"]))
    return RunResult(
        label=str(meta["label"]), metrics=metrics, log=record,
        time_s=np.asarray(data["t"], dtype=float),
        speed_kmh=np.asarray(data["speed_kmh"], dtype=float),
        steer_ref_deg=np.asarray(data["steer_ref_deg"], dtype=float),
        solve_ms=np.asarray(timing["solve_ms"], dtype=float),
        input_lower=np.asarray(meta["input_lower"], dtype=float),
        input_upper=np.asarray(meta["input_upper"], dtype=float),
        input_weights=np.asarray(meta["input_weights"], dtype=float),
        output_weights=np.asarray(meta["output_weights"], dtype=float),
        v_ref_kmh=float(meta["v_ref_kmh"]),
        fallback_count=int(meta["fallback_count"]))
