"""Model-based receding-horizon control condensed to a dense QP.

The identified linear model is unrolled over the horizon so predicted
outputs become an affine function of the planned inputs and the current
state estimate; the decision variable is the input sequence itself.
The state estimate comes from a least-squares observer over the same
recent-history window the data-driven controller uses: fit the window's
initial state to the recorded inputs and outputs, then roll it forward
to now.  Both observer and predictor reduce to constant matrices at
condense time, so each tick is matrix-vector work plus one QP solve.

When the output box cannot be met from the current state, the step is
re-solved with the box relaxed through priced slack variables — the
same price the data-driven controller puts on its recent-output
mismatch — and the step is flagged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..qp import DenseQpSolver, QpProblem, SolverSettings
from .config import ControlConfig
from .identify import LinearModel
from .runtime import ControllerState, RecedingHorizonController

log = logging.getLogger(__name__)

__all__ = ["LmpcTemplate", "condense_lmpc", "lmpc_step", "LmpcController"]


def _prediction_matrices(model: LinearModel, steps: int):
    """Unrolled response: outputs = state_map @ x + input_map @ inputs."""
    n, m, p = model.order, model.n_inputs, model.n_outputs
    powers = np.empty((steps + 1, n, n))
    powers[0] = np.eye(n)
    for k in range(steps):
        powers[k + 1] = model.a @ powers[k]
    state_map = np.vstack([model.c @ powers[k] for k in range(steps)])
    input_map = np.zeros((p * steps, m * steps))
    markov = model.markov_parameters(steps)
    for k in range(steps):
        input_map[p * k:p * (k + 1), m * k:m * (k + 1)] = markov[0]
        for j in range(k):
            input_map[p * k:p * (k + 1), m * j:m * (j + 1)] = markov[k - j]
    return state_map, input_map, powers


def _observer_maps(model: LinearModel, window: int):
    """Constant maps turning the recent window into a current-state estimate.

    The window's opening state is the least-squares fit to the recorded
    outputs minus the forced response; propagating it to the present
    folds both steps into one matrix per signal.
    """
    obs, toeplitz, powers = _prediction_matrices(model, window)
    pinv_obs = np.linalg.pinv(obs)
    reach = np.hstack([powers[window - 1 - j] @ model.b
                       for j in range(window)])
    from_outputs = powers[window] @ pinv_obs
    from_inputs = reach - from_outputs @ toeplitz
    return from_outputs, from_inputs, obs, pinv_obs, toeplitz


@dataclass(frozen=True)
class LmpcTemplate:
    """Condensed constant parts of the model-based QP, hard and soft."""

    model: LinearModel
    cfg: ControlConfig
    state_map: np.ndarray                # predicted outputs from state
    input_map: np.ndarray                # predicted outputs from inputs
    hessian: np.ndarray
    constraints: np.ndarray
    bound_lower: np.ndarray
    bound_upper: np.ndarray
    lin_state_map: np.ndarray            # q += map @ (base - y_ref)
    soft_hessian: np.ndarray | None
    soft_constraints: np.ndarray | None
    soft_bound_lower: np.ndarray | None
    soft_bound_upper: np.ndarray | None
    est_from_outputs: np.ndarray
    est_from_inputs: np.ndarray
    window_output_map: np.ndarray        # recent outputs the estimate implies
    window_output_pinv: np.ndarray
    window_input_map: np.ndarray

    @property
    def decision_dim(self) -> int:
        return self.hessian.shape[0]


def condense_lmpc(model: LinearModel, cfg: ControlConfig) -> LmpcTemplate:
    """Collapse a linear model and config into the constant QP parts."""
    if (model.n_inputs, model.n_outputs) != (cfg.n_inputs, cfg.n_outputs):
        raise ValueError(
            f"model carries {model.n_inputs}x{model.n_outputs} channels, "
            f"config expects {cfg.n_inputs}x{cfg.n_outputs}")
    radius = model.spectral_radius
    if radius > 1.0:
        log.warning("condensing an unstable model (spectral radius %.4f); "
                    "horizon powers may be large", radius)
    horizon, m, p = cfg.horizon, cfg.n_inputs, cfg.n_outputs
    state_map, input_map, _ = _prediction_matrices(model, horizon)
    rw = cfg.input_weight_diag()
    qw = cfg.output_weight_diag()
    nu = m * horizon
    ny = p * horizon
    hessian = 2.0 * ((input_map.T * qw) @ input_map + np.diag(rw))
    constraints = np.vstack([np.eye(nu), input_map])
    in_lo = np.tile(cfg.input_lower - model.u_offset, horizon)
    in_hi = np.tile(cfg.input_upper - model.u_offset, horizon)
    lower = np.concatenate([in_lo, np.full(ny, -np.inf)])
    upper = np.concatenate([in_hi, np.full(ny, np.inf)])

    soft = cfg.mismatch_penalty is not None
    if soft:
        soft_hessian = np.zeros((nu + ny, nu + ny))
        soft_hessian[:nu, :nu] = hessian
        soft_hessian[nu:, nu:] = 2.0 * cfg.mismatch_penalty * np.eye(ny)
        eye_s = np.eye(ny)
        soft_constraints = np.vstack([
            np.hstack([np.eye(nu), np.zeros((nu, ny))]),
            np.hstack([input_map, -eye_s]),      # upper side, slack relieves
            np.hstack([input_map, eye_s]),       # lower side, slack relieves
            np.hstack([np.zeros((ny, nu)), eye_s]),
        ])
        soft_lower = np.concatenate([
            in_lo, np.full(ny, -np.inf), np.full(ny, -np.inf), np.zeros(ny)])
        soft_upper = np.concatenate([
            in_hi, np.full(ny, np.inf), np.full(ny, np.inf),
            np.full(ny, np.inf)])
    else:
        soft_hessian = soft_constraints = None
        soft_lower = soft_upper = None

    est_y, est_u, win_obs, win_pinv, win_toep = _observer_maps(model, cfg.t_ini)
    return LmpcTemplate(
        model=model, cfg=cfg, state_map=state_map, input_map=input_map,
        hessian=hessian, constraints=constraints,
        bound_lower=lower, bound_upper=upper,
        lin_state_map=2.0 * (input_map.T * qw),
        soft_hessian=soft_hessian, soft_constraints=soft_constraints,
        soft_bound_lower=soft_lower, soft_bound_upper=soft_upper,
        est_from_outputs=est_y, est_from_inputs=est_u,
        window_output_map=win_obs, window_output_pinv=win_pinv,
        window_input_map=win_toep)


class LmpcController(RecedingHorizonController):
    """Stateful model-based controller: observer + hard/soft QP pair."""

    def __init__(self, template: LmpcTemplate,
                 settings: SolverSettings | None = None):
        super().__init__(template.cfg, settings)
        self.template = template
        self.solver: DenseQpSolver | None = None
        self.soft_solver: DenseQpSolver | None = None
        self._soft_warm: tuple | None = None

    def estimate_state(self) -> tuple[np.ndarray, float]:
        """Current-state estimate and the window mismatch it leaves."""
        tmpl = self.template
        model = tmpl.model
        u_win = (self.state.u_recent - model.u_offset).ravel()
        y_win = (self.state.y_recent - model.y_offset).ravel()
        x_hat = tmpl.est_from_outputs @ y_win + tmpl.est_from_inputs @ u_win
        forced = tmpl.window_input_map @ u_win
        opening = tmpl.window_output_pinv @ (y_win - forced)
        implied = tmpl.window_output_map @ opening + forced
        return x_hat, float(np.linalg.norm(y_win - implied))

    def _solve(self, u_ref: np.ndarray, y_ref: np.ndarray):
        tmpl, cfg = self.template, self.cfg
        model = tmpl.model
        x_hat, window_mismatch = self.estimate_state()
        base = tmpl.state_map @ x_hat
        ur = (u_ref - model.u_offset).ravel()
        yr = (y_ref - model.y_offset).ravel()
        rw = cfg.input_weight_diag()
        qw = cfg.output_weight_diag()
        linear = tmpl.lin_state_map @ (base - yr) - 2.0 * (rw * ur)
        offset = float((base - yr) @ (qw * (base - yr)) + ur @ (rw * ur))

        nu = cfg.n_inputs * cfg.horizon
        ny = cfg.n_outputs * cfg.horizon
        out_lo = np.tile(cfg.output_lower - model.y_offset, cfg.horizon) - base
        out_hi = np.tile(cfg.output_upper - model.y_offset, cfg.horizon) - base
        lower = tmpl.bound_lower.copy()
        upper = tmpl.bound_upper.copy()
        lower[nu:] = out_lo
        upper[nu:] = out_hi
        if self.solver is None:
            self.solver = DenseQpSolver(
                QpProblem(tmpl.hessian, linear, tmpl.constraints, lower, upper),
                self.settings)
        else:
            self.solver.update(linear=linear, lower=lower, upper=upper)
        if (self.state.warm_primal is not None
                and self.state.warm_primal.size == nu):
            self.solver.warm_start(self.state.warm_primal, self.state.warm_dual)
        sol = self.solver.solve()
        softened = False
        if sol.status == "primal_infeasible" and tmpl.soft_hessian is not None:
            sol = self._solve_soft(linear, out_lo, out_hi)
            softened = True
        diag = {"status": sol.status, "iterations": sol.iterations,
                "softened": softened}
        if not sol.solved:
            return None, None, diag
        u_c = sol.x[:nu]
        if not softened:
            self.state.warm_primal = sol.x.copy()
            self.state.warm_dual = sol.y.copy()
        slack = sol.x[nu:] if softened else np.zeros(0)
        planned_u = u_c.reshape(cfg.horizon, cfg.n_inputs) + model.u_offset
        planned_y = (base + tmpl.input_map @ u_c).reshape(
            cfg.horizon, cfg.n_outputs) + model.y_offset
        diag["objective"] = sol.objective + offset
        diag["sigma_y_norm"] = window_mismatch if not softened else \
            float(np.linalg.norm(slack))
        return planned_u, planned_y, diag

    def _solve_soft(self, linear: np.ndarray, out_lo: np.ndarray,
                    out_hi: np.ndarray):
        """Retry with the output box relaxed through priced slack."""
        tmpl, cfg = self.template, self.cfg
        nu = cfg.n_inputs * cfg.horizon
        ny = cfg.n_outputs * cfg.horizon
        lin = np.concatenate([linear, np.zeros(ny)])
        lower = tmpl.soft_bound_lower.copy()
        upper = tmpl.soft_bound_upper.copy()
        upper[nu:nu + ny] = out_hi
        lower[nu + ny:nu + 2 * ny] = out_lo
        if self.soft_solver is None:
            self.soft_solver = DenseQpSolver(
                QpProblem(tmpl.soft_hessian, lin, tmpl.soft_constraints,
                          lower, upper),
                self.settings)
        else:
            self.soft_solver.update(linear=lin, lower=lower, upper=upper)
        if self._soft_warm is not None:
            self.soft_solver.warm_start(*self._soft_warm)
        sol = self.soft_solver.solve()
        if sol.solved:
            self._soft_warm = (sol.x.copy(), sol.y.copy())
        return sol


def lmpc_step(tmpl: LmpcTemplate, state: ControllerState, u_ref, y_ref,
              settings: SolverSettings | None = None, carry=None):
    """One model-based solve; returns ``(decision, carry)`` for reuse.

    ``carry`` holds the cached solvers between calls the same way the
    data-driven step threads its solver through.
    """
    controller = LmpcController(tmpl, settings)
    controller.state = state
    if carry is not None:
        controller.solver, controller.soft_solver, controller._soft_warm = carry
    decision = controller.decide(u_ref, y_ref)
    return decision, (controller.solver, controller.soft_solver,
                      controller._soft_warm)
