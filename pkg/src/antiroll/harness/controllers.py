"""Controller construction from scenario configuration and artifacts."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from ..control import (DeepcController, LmpcController, RecedingHorizonController,
                       condense_deepc, condense_lmpc, load_model)
from ..data import (DataLibrary, ReducedLibrary, TrajectoryLog, concatenate,
                    load_library, partition, save_library, svd_reduce)
from .scenario import ControllerProfile, ScenarioConfig

__all__ = ["build_controller", "build_library"]


def build_library(logs: Sequence[TrajectoryLog], t_ini: int, horizon: int,
                  reduce_q: int | None = None,
                  out_path: str | Path | None = None,
                  seed: int | None = None) -> DataLibrary | ReducedLibrary:
    """Assemble a data library from one or more recorded logs.

    Each log contributes its own window columns, so no column mixes
    samples from two recordings.  ``reduce_q`` compresses the result
    onto its leading singular directions; ``out_path`` persists it.
    """
    if not logs:
        raise ValueError("need at least one log")
    lib = concatenate([partition(entry, t_ini, horizon) for entry in logs])
    if reduce_q is not None:
        lib = svd_reduce(lib, reduce_q)
    if out_path is not None:
        source = ",".join(entry.content_hash()[:16] for entry in logs)
        save_library(lib, out_path, seed=seed, source_hash=source)
    return lib


def _library_for(scenario: ScenarioConfig,
                 profile: ControllerProfile) -> DataLibrary | ReducedLibrary:
    if scenario.library_file is None:
        raise ValueError(
            f"scenario {scenario.name!r} needs a built library "
            "(run the collect and build-lib steps first)")
    lib = load_library(scenario.library_file)
    cfg = profile.control
    if (lib.t_ini, lib.horizon) != (cfg.t_ini, cfg.horizon):
        raise ValueError(
            f"library windows ({lib.t_ini}, {lib.horizon}) do not match the "
            f"controller profile ({cfg.t_ini}, {cfg.horizon})")
    if scenario.controller == "deepc":
        if isinstance(lib, ReducedLibrary):
            raise ValueError(
                "full-library controller given a reduced library; rebuild "
                "without reduction or switch the controller kind")
        return lib
    # reduced-dimension variant
    if isinstance(lib, ReducedLibrary):
        return lib
    q = scenario.reduce_q if scenario.reduce_q is not None else profile.reduce_q
    return svd_reduce(lib, q)


def build_controller(scenario: ScenarioConfig, profile: ControllerProfile
                     ) -> RecedingHorizonController | None:
    """Instantiate the scenario's controller, or None for driver-only."""
    kind = scenario.controller
    if kind == "driver":
        return None
    if kind in ("deepc", "rd-deepc"):
        lib = _library_for(scenario, profile)
        template = condense_deepc(lib, profile.control)
        return DeepcController(template, settings=profile.solver)
    if kind == "lmpc":
        if scenario.model_file is None:
            raise ValueError(
                f"scenario {scenario.name!r} needs an identified model "
                "(run the collect and identify steps first)")
        model = load_model(scenario.model_file)
        template = condense_lmpc(model, profile.control)
        return LmpcController(template, settings=profile.solver)
    raise ValueError(f"unknown controller kind {kind!r}")
