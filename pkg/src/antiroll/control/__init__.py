"""Receding-horizon controllers: data-driven and model-based."""

from .config import ControlConfig
from .cost import closed_loop_cost
from .deepc import DeepcController, QpTemplate, condense_deepc, deepc_step
from .identify import (FitReport, IdentificationError, LinearModel,
                       identify_state_space, load_model, save_model)
from .lmpc import LmpcController, LmpcTemplate, condense_lmpc, lmpc_step
from .runtime import (ControlDecision, ControllerState,
                      RecedingHorizonController, update_ini_buffers)

__all__ = [
    "ControlConfig",
    "ControlDecision",
    "ControllerState",
    "DeepcController",
    "FitReport",
    "IdentificationError",
    "LinearModel",
    "LmpcController",
    "LmpcTemplate",
    "QpTemplate",
    "RecedingHorizonController",
    "closed_loop_cost",
    "condense_deepc",
    "condense_lmpc",
    "deepc_step",
    "lmpc_step",
    "identify_state_space",
    "load_model",
    "save_model",
    "update_ini_buffers",
]
