"""Shared configuration for the receding-horizon controllers.

Both controller families consume the same config: window lengths, stage
weights, penalty strengths, actuator and output boxes, and how many of
the planned inputs are applied per solve.  Weights are per-channel and
tiled over the horizon at condense time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _channel_array(value, dim: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(dim, float(arr[0]))
    if arr.shape != (dim,):
        raise ValueError(f"{name} must be scalar or length {dim}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class ControlConfig:
    """Horizon structure, weights, penalties, and boxes for one controller.

    ``t_ini`` is how many recent input/output samples pin down the plant's
    internal condition; ``horizon`` is how far ahead the plan extends.
    ``ridge`` penalizes the squared norm of the data-combination weights
    (ignored by the model-based controller).  ``mismatch_penalty`` prices
    the slack between recorded recent outputs and what the plan implies
    for them; ``None`` makes that consistency a hard constraint.
    ``input_slack_penalty`` is accepted for interface completeness but
    unused: applied inputs are known exactly, so they get no slack.
    """

    n_inputs: int
    n_outputs: int
    t_ini: int
    horizon: int
    input_weights: np.ndarray = field(default=1.0)          # per input channel
    output_weights: np.ndarray = field(default=1.0)         # per output channel
    ridge: float = 0.0
    mismatch_penalty: float | None = None
    input_slack_penalty: float | None = None
    input_lower: np.ndarray = field(default=-np.inf)
    input_upper: np.ndarray = field(default=np.inf)
    output_lower: np.ndarray = field(default=-np.inf)
    output_upper: np.ndarray = field(default=np.inf)
    apply_steps: int = 1

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_outputs < 1:
            raise ValueError("need at least one input and one output channel")
        if self.t_ini < 1:
            raise ValueError("t_ini must be at least 1")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if not 1 <= self.apply_steps < self.horizon:
            raise ValueError("apply_steps must lie in [1, horizon)")
        m, p = self.n_inputs, self.n_outputs
        for name, dim in (("input_weights", m), ("output_weights", p)):
            arr = _channel_array(getattr(self, name), dim, name)
            if np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, arr)
        for name in ("ridge", "mismatch_penalty", "input_slack_penalty"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ValueError(f"{name} must be nonnegative")
        for side, dim in (("input", m), ("output", p)):
            lo = _channel_array(getattr(self, f"{side}_lower"), dim, f"{side}_lower")
            hi = _channel_array(getattr(self, f"{side}_upper"), dim, f"{side}_upper")
            if np.any(lo > hi):
                raise ValueError(f"empty {side} box")
            object.__setattr__(self, f"{side}_lower", lo)
            object.__setattr__(self, f"{side}_upper", hi)

    def input_weight_diag(self) -> np.ndarray:
        """Stage input weights tiled over the horizon (sample-major)."""
        return np.tile(self.input_weights, self.horizon)

    def output_weight_diag(self) -> np.ndarray:
        return np.tile(self.output_weights, self.horizon)

    def clip_inputs(self, u: np.ndarray) -> np.ndarray:
        """Clamp a (steps, m) input block into the actuator box."""
        return np.clip(u, self.input_lower, self.input_upper)
