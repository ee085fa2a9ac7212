"""Controller runtime: history buffers, per-step results, shared loop logic.

A controller instance is single-threaded and stateful.  Every tick it is
asked to decide the next input block from reference sequences, and is
then told what was actually applied and measured so its history buffers
stay current.  The first ``t_ini`` ticks bootstrap: reference inputs
pass through unmodified while the buffers fill, since no plan can be
anchored without a full recent-history window.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..qp import SolverSettings
from .config import ControlConfig

log = logging.getLogger(__name__)


@dataclass
class ControllerState:
    """Rolling history plus warm-start carryover between solves.

    ``u_recent`` and ``y_recent`` hold the last ``t_ini`` applied inputs
    and measured outputs, oldest first; ``filled`` counts how many rows
    are real data.  The previous optimizer point and the last applied
    input survive between ticks for warm starting and for the fallback
    path when a solve fails.
    """

    u_recent: np.ndarray                 # (t_ini, m)
    y_recent: np.ndarray                 # (t_ini, p)
    filled: int = 0
    warm_primal: np.ndarray | None = None
    warm_dual: np.ndarray | None = None
    last_applied: np.ndarray | None = None   # (m,) most recent input
    step_count: int = 0

    @classmethod
    def empty(cls, t_ini: int, n_inputs: int, n_outputs: int) -> "ControllerState":
        return cls(u_recent=np.zeros((t_ini, n_inputs)),
                   y_recent=np.zeros((t_ini, n_outputs)))

    @property
    def ready(self) -> bool:
        return self.filled >= self.u_recent.shape[0]


def update_ini_buffers(state: ControllerState, u_applied: np.ndarray,
                       y_measured: np.ndarray) -> ControllerState:
    """Push one (input, output) sample pair; the oldest row falls out."""
    u = np.asarray(u_applied, dtype=float).ravel()
    y = np.asarray(y_measured, dtype=float).ravel()
    if u.shape != (state.u_recent.shape[1],):
        raise ValueError(f"expected {state.u_recent.shape[1]} input channels")
    if y.shape != (state.y_recent.shape[1],):
        raise ValueError(f"expected {state.y_recent.shape[1]} output channels")
    state.u_recent[:-1] = state.u_recent[1:]
    state.u_recent[-1] = u
    state.y_recent[:-1] = state.y_recent[1:]
    state.y_recent[-1] = y
    state.filled = min(state.filled + 1, state.u_recent.shape[0])
    state.last_applied = u.copy()
    state.step_count += 1
    return state


@dataclass(frozen=True)
class ControlDecision:
    """One tick's applied input block plus solver diagnostics.

    ``inputs`` is already clipped into the actuator box.  ``fallback``
    marks a failed solve answered by holding the previous input;
    ``softened`` marks a model-based step that had to relax its output
    box to stay feasible.  ``sigma_y_norm`` is the recent-output
    mismatch norm at the optimum (the diagnostic-CSV column name).
    """

    inputs: np.ndarray                   # (apply_steps, m)
    status: str
    solve_ms: float = 0.0
    iterations: int = 0
    objective: float = float("nan")
    sigma_y_norm: float = 0.0
    fallback: bool = False
    softened: bool = False
    bootstrap: bool = False
    planned_inputs: np.ndarray | None = None    # (horizon, m)
    planned_outputs: np.ndarray | None = None   # (horizon, p)


def reference_block(ref: np.ndarray, steps: int, dim: int, name: str) -> np.ndarray:
    """Broadcast a single sample, or validate a (steps, dim) sequence."""
    arr = np.asarray(ref, dtype=float)
    if arr.ndim <= 1:
        row = np.atleast_1d(arr).astype(float)
        if row.size == 1:
            row = np.full(dim, float(row[0]))
        if row.shape != (dim,):
            raise ValueError(f"{name} sample must have {dim} channels")
        return np.tile(row, (steps, 1))
    if arr.shape != (steps, dim):
        raise ValueError(f"{name} must be ({steps}, {dim}), got {arr.shape}")
    return arr


class RecedingHorizonController:
    """Common decide/record loop shared by both controller families.

    Subclasses implement ``_solve`` which returns the planned input and
    output sequences plus raw solver diagnostics; everything around it —
    bootstrap passthrough, fallback on failed solves, clipping, buffer
    upkeep — lives here.
    """

    def __init__(self, cfg: ControlConfig,
                 settings: SolverSettings | None = None):
        self.cfg = cfg
        self.settings = settings if settings is not None else SolverSettings()
        self.state = ControllerState.empty(cfg.t_ini, cfg.n_inputs, cfg.n_outputs)

    def decide(self, u_ref, y_ref) -> ControlDecision:
        """Choose the next ``apply_steps`` inputs for the given references."""
        cfg = self.cfg
        u_ref = reference_block(u_ref, cfg.horizon, cfg.n_inputs, "u_ref")
        y_ref = reference_block(y_ref, cfg.horizon, cfg.n_outputs, "y_ref")
        take = cfg.apply_steps
        if not self.state.ready:
            inputs = cfg.clip_inputs(u_ref[:take].copy())
            return ControlDecision(inputs=inputs, status="bootstrap",
                                   bootstrap=True)
        start = time.perf_counter()
        planned_u, planned_y, diag = self._solve(u_ref, y_ref)
        elapsed = (time.perf_counter() - start) * 1e3
        if planned_u is None:
            inputs = self._fallback_inputs(u_ref[:take])
            log.warning("solve failed (%s) at step %d: holding previous input",
                        diag.get("status", "?"), self.state.step_count)
            return ControlDecision(
                inputs=inputs, status=diag.get("status", "failed"),
                solve_ms=elapsed, iterations=diag.get("iterations", 0),
                fallback=True, softened=diag.get("softened", False))
        inputs = cfg.clip_inputs(planned_u[:take].copy())
        return ControlDecision(
            inputs=inputs, status=diag["status"], solve_ms=elapsed,
            iterations=diag["iterations"], objective=diag["objective"],
            sigma_y_norm=diag.get("sigma_y_norm", 0.0),
            softened=diag.get("softened", False),
            planned_inputs=planned_u, planned_outputs=planned_y)

    def record(self, u_applied, y_measured) -> None:
        """Feed back what was actually applied and measured this tick."""
        update_ini_buffers(self.state, u_applied, y_measured)

    def _fallback_inputs(self, ref_block: np.ndarray) -> np.ndarray:
        take = self.cfg.apply_steps
        if self.state.last_applied is not None:
            held = np.tile(self.state.last_applied, (take, 1))
        else:
            held = ref_block.copy()
        return self.cfg.clip_inputs(held)

    def _solve(self, u_ref: np.ndarray, y_ref: np.ndarray):
        raise NotImplementedError
