"""Scenario and controller-profile configuration for benchmark runs.

A scenario file names the physical setup (vehicle, track, terrain,
speed target, duration) and the controller driving it; a controller
profile file holds the tuning numbers (windows, weights, penalties,
boxes, solver knobs).  Both use the flat ``key = value`` format so every
experiment is reproducible from two small text files plus a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .. import configfile
from ..control import ControlConfig
from ..plant import track_by_name
from ..qp import SolverSettings

__all__ = ["ControllerProfile", "ScenarioConfig", "load_controller_profile",
           "load_scenario", "packaged_config"]

CONTROLLER_KINDS = ("driver", "lmpc", "deepc", "rd-deepc")
TERRAIN_KINDS = ("flat", "riverbed")

_CONFIG_ROOT = Path(__file__).resolve().parent.parent / "configs"


def packaged_config(relative: str) -> Path:
    """Absolute path of a config file shipped inside the package."""
    path = _CONFIG_ROOT / relative
    if not path.is_file():
        raise FileNotFoundError(f"no packaged config {relative!r}")
    return path


@dataclass(frozen=True)
class ScenarioConfig:
    """One closed-loop experiment, fully determined together with a seed."""

    name: str
    vehicle_file: Path
    track: str
    terrain: str
    controller: str
    controller_file: Path
    v_ref_kmh: float
    duration_s: float
    seed: int
    output_dir: Path
    steer_source: str = "driver"
    terrain_seed: int = 0
    library_file: Path | None = None
    model_file: Path | None = None
    reduce_q: int | None = None

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.v_ref_kmh <= 0:
            raise ValueError("speed reference must be positive")
        if self.controller not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.controller!r}")
        if self.terrain not in TERRAIN_KINDS:
            raise ValueError(f"unknown terrain {self.terrain!r}")
        if self.steer_source != "driver":
            raise ValueError(
                f"unsupported steering reference source {self.steer_source!r}")
        track_by_name(self.track)  # raises KeyError for unknown ids
        for label, p in (("vehicle", self.vehicle_file),
                         ("controller", self.controller_file)):
            if not Path(p).is_file():
                raise FileNotFoundError(f"{label} file {p} does not exist")

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        """Copy with selected fields replaced (used by CLI flags)."""
        return replace(self, **changes)


@dataclass(frozen=True)
class ControllerProfile:
    """Tuning numbers shared by every controller kind."""

    control: ControlConfig
    sample_period: float = 0.01
    reduce_q: int | None = None
    model_order: int = 6
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.sample_period <= 0:
            raise ValueError("sample period must be positive")
        if self.model_order < 1:
            raise ValueError("model order must be at least 1")
        if self.reduce_q is not None and self.reduce_q < 1:
            raise ValueError("reduction dimension must be at least 1")


_PROFILE_KEYS = {
    "t_ini", "horizon", "input_weights", "output_weights", "ridge",
    "mismatch_penalty", "input_min", "input_max", "output_min", "output_max",
    "apply_steps", "sample_period", "reduce_q", "model_order",
    "solver_eps_abs", "solver_eps_rel", "solver_max_iter",
    "solver_check_every", "solver_polish",
}

_SCENARIO_KEYS = {
    "name", "vehicle", "track", "terrain", "terrain_seed", "controller",
    "controller_config", "library", "model", "v_ref", "steer_source",
    "duration", "seed", "output_dir", "reduce_q",
}


def _reject_unknown(raw: dict, allowed: set, path: Path) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValueError(f"{path}: unknown keys {', '.join(unknown)}")


def load_controller_profile(path: str | Path) -> ControllerProfile:
    """Parse a controller profile file into typed configuration."""
    path = Path(path)
    raw = configfile.load(path)
    _reject_unknown(raw, _PROFILE_KEYS, path)
    for key in ("t_ini", "horizon", "input_weights", "output_weights"):
        if key not in raw:
            raise ValueError(f"{path}: missing required key {key!r}")
    bounds = {}
    for src, dst in (("input_min", "input_lower"), ("input_max", "input_upper"),
                     ("output_min", "output_lower"),
                     ("output_max", "output_upper")):
        if src in raw:
            bounds[dst] = raw[src]
    control = ControlConfig(
        n_inputs=2, n_outputs=1,
        t_ini=int(raw["t_ini"]), horizon=int(raw["horizon"]),
        input_weights=raw["input_weights"],
        output_weights=raw["output_weights"],
        ridge=float(raw.get("ridge", 0.0)),
        mismatch_penalty=(float(raw["mismatch_penalty"])
                          if "mismatch_penalty" in raw else None),
        apply_steps=int(raw.get("apply_steps", 1)),
        **bounds)
    solver = SolverSettings(
        eps_abs=float(raw.get("solver_eps_abs", 1e-6)),
        eps_rel=float(raw.get("solver_eps_rel", 1e-6)),
        max_iter=int(raw.get("solver_max_iter", 20000)),
        check_every=int(raw.get("solver_check_every", 25)),
        polish=bool(raw.get("solver_polish", True)))
    return ControllerProfile(
        control=control,
        sample_period=float(raw.get("sample_period", 0.01)),
        reduce_q=int(raw["reduce_q"]) if "reduce_q" in raw else None,
        model_order=int(raw.get("model_order", 6)),
        solver=solver)


def load_scenario(path: str | Path, *, seed: int | None = None,
                  output_dir: str | Path | None = None,
                  library: str | Path | None = None,
                  model: str | Path | None = None,
                  reduce_q: int | None = None) -> ScenarioConfig:
    """Parse a scenario file, applying optional command-line overrides.

    The vehicle and controller files resolve relative to the scenario
    file's directory (so packaged scenarios can reference their siblings);
    the library, model, and output paths resolve against the working
    directory, since they are run-time artifacts.
    """
    path = Path(path)
    raw = configfile.load(path)
    _reject_unknown(raw, _SCENARIO_KEYS, path)
    for key in ("vehicle", "track", "terrain", "controller",
                "controller_config", "v_ref", "duration", "output_dir"):
        if key not in raw:
            raise ValueError(f"{path}: missing required key {key!r}")
    base = path.parent

    def sibling(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else (base / p).resolve()

    def artifact(value: str | Path | None) -> Path | None:
        return None if value is None else Path(value)

    return ScenarioConfig(
        name=str(raw.get("name", path.stem)),
        vehicle_file=sibling(str(raw["vehicle"])),
        track=str(raw["track"]),
        terrain=str(raw["terrain"]),
        controller=str(raw["controller"]),
        controller_file=sibling(str(raw["controller_config"])),
        v_ref_kmh=float(raw["v_ref"]),
        duration_s=float(raw["duration"]),
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        output_dir=Path(output_dir if output_dir is not None
                        else raw["output_dir"]),
        steer_source=str(raw.get("steer_source", "driver")),
        terrain_seed=int(raw.get("terrain_seed", 0)),
        library_file=artifact(library if library is not None
                              else raw.get("library")),
        model_file=artifact(model if model is not None else raw.get("model")),
        reduce_q=(int(reduce_q) if reduce_q is not None
                  else (int(raw["reduce_q"]) if "reduce_q" in raw else None)),
    )
