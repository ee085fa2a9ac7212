"""Data-driven receding-horizon control condensed to a dense QP.

The decision variable is the weight vector that combines recorded
library columns into one planned trajectory: inputs and outputs over
the horizon are linear images of it, and the recent-history window
anchors it to the plant's current condition.  Recent inputs bind as
hard equalities (they were applied exactly); recent outputs either
bind hard or through a priced slack, since measured outputs carry
noise.  A ridge term on the weights themselves tames the many degrees
of freedom a raw data library has.

Everything static — Hessian, constraint rows, the maps that turn
references and history into the per-step linear term — is condensed
once into a template; each tick only refreshes vectors and re-solves
with a warm start and a cached factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import DataLibrary, ReducedLibrary
from ..qp import DenseQpSolver, QpProblem, SolverSettings
from .config import ControlConfig
from .runtime import ControllerState, RecedingHorizonController

__all__ = ["QpTemplate", "condense_deepc", "deepc_step", "DeepcController"]


@dataclass(frozen=True)
class QpTemplate:
    """Condensed constant part of the data-driven QP.

    The Hessian and constraint matrix never change between ticks; the
    linear term and the history-dependent bound rows do.  ``*_map``
    matrices recover physical sequences from the (column-equilibrated)
    weight vector.
    """

    hessian: np.ndarray                  # P in 1/2 w'Pw + q'w
    constraints: np.ndarray              # stacked constraint rows
    bound_lower: np.ndarray              # per-step bound templates
    bound_upper: np.ndarray
    lin_input_map: np.ndarray            # q -= map @ u_ref
    lin_output_map: np.ndarray           # q -= map @ y_ref
    lin_recent_map: np.ndarray | None    # q -= map @ y_recent (priced slack)
    input_map: np.ndarray                # planned inputs  = map @ w
    output_map: np.ndarray               # planned outputs = map @ w
    mismatch_map: np.ndarray             # implied recent outputs = map @ w
    rows_u_recent: slice                 # equality rows pinned to u history
    rows_y_recent: slice | None          # equality rows pinned to y history
    column_scale: np.ndarray             # equilibration applied to the data
    cfg: ControlConfig

    @property
    def decision_dim(self) -> int:
        return self.hessian.shape[0]

    def assemble(self, u_recent: np.ndarray, y_recent: np.ndarray,
                 u_ref: np.ndarray, y_ref: np.ndarray):
        """Per-step linear term, bounds, and objective offset.

        History and reference blocks arrive as (samples, channels) and
        are flattened sample-major, matching the library's row layout.
        Returns ``(linear, lower, upper, offset)`` where the true
        objective equals the QP value plus ``offset``.
        """
        cfg = self.cfg
        ur = np.asarray(u_ref, dtype=float).ravel()
        yr = np.asarray(y_ref, dtype=float).ravel()
        uh = np.asarray(u_recent, dtype=float).ravel()
        yh = np.asarray(y_recent, dtype=float).ravel()
        linear = -(self.lin_input_map @ ur + self.lin_output_map @ yr)
        rw = cfg.input_weight_diag()
        qw = cfg.output_weight_diag()
        offset = float(ur @ (rw * ur) + yr @ (qw * yr))
        if self.lin_recent_map is not None:
            linear -= self.lin_recent_map @ yh
            offset += float(cfg.mismatch_penalty * (yh @ yh))
        lower = self.bound_lower.copy()
        upper = self.bound_upper.copy()
        lower[self.rows_u_recent] = uh
        upper[self.rows_u_recent] = uh
        if self.rows_y_recent is not None:
            lower[self.rows_y_recent] = yh
            upper[self.rows_y_recent] = yh
        return linear, lower, upper, offset


def _equilibrate_columns(stacked: np.ndarray) -> np.ndarray:
    """Per-column scale bringing the data matrix to unit max-magnitude.

    Library columns mix steering degrees, speeds, and unit-interval
    load-transfer values, and the reduced form additionally carries
    singular-value magnitudes; without rescaling the condensed Hessian
    is badly conditioned.
    """
    peaks = np.abs(stacked).max(axis=0)
    scale = np.ones_like(peaks)
    nonzero = peaks > 0
    scale[nonzero] = 1.0 / peaks[nonzero]
    return scale


def condense_deepc(lib: DataLibrary | ReducedLibrary,
                   cfg: ControlConfig) -> QpTemplate:
    """Collapse a data library and config into the constant QP parts."""
    if (lib.n_inputs, lib.n_outputs) != (cfg.n_inputs, cfg.n_outputs):
        raise ValueError(
            f"library carries {lib.n_inputs}x{lib.n_outputs} channels, "
            f"config expects {cfg.n_inputs}x{cfg.n_outputs}")
    if (lib.t_ini, lib.horizon) != (cfg.t_ini, cfg.horizon):
        raise ValueError(
            f"library windows ({lib.t_ini}, {lib.horizon}) do not match "
            f"config ({cfg.t_ini}, {cfg.horizon})")
    scale = _equilibrate_columns(lib.stacked())
    u_past = lib.u_past * scale
    u_future = lib.u_future * scale
    y_past = lib.y_past * scale
    y_future = lib.y_future * scale

    rw = cfg.input_weight_diag()
    qw = cfg.output_weight_diag()
    hessian = 2.0 * ((u_future.T * rw) @ u_future
                     + (y_future.T * qw) @ y_future)
    # ridge acts on the library's own coordinates, i.e. before equilibration
    hessian[np.diag_indices_from(hessian)] += 2.0 * cfg.ridge * scale * scale
    soft = cfg.mismatch_penalty is not None
    if soft:
        hessian += 2.0 * cfg.mismatch_penalty * (y_past.T @ y_past)

    m, p = cfg.n_inputs, cfg.n_outputs
    n_eq_u = m * cfg.t_ini
    n_eq_y = 0 if soft else p * cfg.t_ini
    rows = [u_past] if soft else [u_past, y_past]
    rows += [u_future, y_future]
    constraints = np.vstack(rows)
    total = constraints.shape[0]
    lower = np.full(total, -np.inf)
    upper = np.full(total, np.inf)
    box_at = n_eq_u + n_eq_y
    lower[box_at:box_at + m * cfg.horizon] = np.tile(cfg.input_lower, cfg.horizon)
    upper[box_at:box_at + m * cfg.horizon] = np.tile(cfg.input_upper, cfg.horizon)
    lower[box_at + m * cfg.horizon:] = np.tile(cfg.output_lower, cfg.horizon)
    upper[box_at + m * cfg.horizon:] = np.tile(cfg.output_upper, cfg.horizon)

    return QpTemplate(
        hessian=hessian,
        constraints=constraints,
        bound_lower=lower,
        bound_upper=upper,
        lin_input_map=2.0 * (u_future.T * rw),
        lin_output_map=2.0 * (y_future.T * qw),
        lin_recent_map=(2.0 * cfg.mismatch_penalty * y_past.T) if soft else None,
        input_map=u_future,
        output_map=y_future,
        mismatch_map=y_past,
        rows_u_recent=slice(0, n_eq_u),
        rows_y_recent=None if soft else slice(n_eq_u, n_eq_u + n_eq_y),
        column_scale=scale,
        cfg=cfg)


def deepc_step(tmpl: QpTemplate, state: ControllerState,
               u_ref, y_ref, settings: SolverSettings | None = None,
               solver: DenseQpSolver | None = None):
    """One receding-horizon solve against the template.

    Returns ``(decision, solver)``; pass the solver back in to reuse its
    cached factorization on subsequent ticks.  On a failed solve the
    decision falls back to the previously applied input and says so.
    """
    controller = DeepcController(tmpl, settings)
    controller.state = state
    controller.solver = solver
    decision = controller.decide(u_ref, y_ref)
    return decision, controller.solver


class DeepcController(RecedingHorizonController):
    """Stateful data-driven controller: template + buffers + warm starts."""

    def __init__(self, template: QpTemplate,
                 settings: SolverSettings | None = None):
        super().__init__(template.cfg, settings)
        self.template = template
        self.solver: DenseQpSolver | None = None

    def _solve(self, u_ref: np.ndarray, y_ref: np.ndarray):
        tmpl, state = self.template, self.state
        linear, lower, upper, offset = tmpl.assemble(
            state.u_recent, state.y_recent, u_ref, y_ref)
        if self.solver is None:
            problem = QpProblem(tmpl.hessian, linear, tmpl.constraints,
                                lower, upper)
            self.solver = DenseQpSolver(problem, self.settings)
        else:
            self.solver.update(linear=linear, lower=lower, upper=upper)
        if (state.warm_primal is not None
                and state.warm_primal.size == tmpl.decision_dim):
            self.solver.warm_start(state.warm_primal, state.warm_dual)
        sol = self.solver.solve()
        diag = {"status": sol.status, "iterations": sol.iterations}
        if not sol.solved:
            return None, None, diag
        state.warm_primal = sol.x.copy()
        state.warm_dual = sol.y.copy()
        w = sol.x
        cfg = tmpl.cfg
        planned_u = (tmpl.input_map @ w).reshape(cfg.horizon, cfg.n_inputs)
        planned_y = (tmpl.output_map @ w).reshape(cfg.horizon, cfg.n_outputs)
        implied = tmpl.mismatch_map @ w
        mismatch = implied - np.asarray(state.y_recent, dtype=float).ravel()
        diag["objective"] = sol.objective + offset
        diag["sigma_y_norm"] = float(np.linalg.norm(mismatch))
        return planned_u, planned_y, diag
