"""Dense operator-splitting QP solver.

The workhorse is an ADMM iteration on the split problem

    minimize 1/2 x'Px + q'x + I_[l,u](z)   s.t.  Ax = z,

with a cached Cholesky factorization of P + sigma*I + A' diag(rho) A.
The factorization survives across receding-horizon steps because only
q, l, u change between solves; that reuse is where essentially all of
the speed over a fresh factorize-per-step approach comes from.

Modified Ruiz equilibration tames badly scaled condensed problems (the
output-penalty weights upstream reach 1e8), equality rows get a stiffer
penalty, and an optional polish step solves the detected active set's
KKT system to push residuals down to refinement level.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from .problem import QpProblem, QpSolution, SolverSettings

_RHO_EQ = 1e3          # stiffening for equality rows
_RHO_LOOSE = 1e-6      # slack for rows with both bounds infinite
_RHO_MIN, _RHO_MAX = 1e-6, 1e6
_ADAPT_TRIGGER = 5.0   # refactor when the residual ratio drifts this far
_ADAPT_SPACING = 25    # iterations between penalty-adaptation attempts


def _ruiz(p: np.ndarray, q: np.ndarray, a: np.ndarray, iters: int):
    """Symmetric diagonal equilibration plus cost normalization."""
    n = p.shape[0]
    m = a.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    c = 1.0
    ps, qs, as_ = p.copy(), q.copy(), a.copy()
    for _ in range(iters):
        col = np.abs(np.vstack([ps, as_])).max(axis=0)
        dd = 1.0 / np.sqrt(np.where(col > 1e-12, col, 1.0))
        if m:
            row = np.abs(as_).max(axis=1)
            de = 1.0 / np.sqrt(np.where(row > 1e-12, row, 1.0))
        else:
            de = e
        ps = dd[:, None] * ps * dd[None, :]
        qs = dd * qs
        if m:
            as_ = de[:, None] * as_ * dd[None, :]
        d *= dd
        e = e * de
        # cost normalization keeps the scaled Hessian O(1)
        pcol = np.abs(ps).max(axis=0)
        denom = max(float(pcol.mean()) if n else 0.0,
                    float(np.abs(qs).max()) if qs.size else 0.0)
        gamma = 1.0 / max(denom, 1e-12)
        ps *= gamma
        qs *= gamma
        c *= gamma
    return ps, qs, as_, d, e, c


class DenseQpSolver:
    """Stateful solver bound to one (P, A) pair.

    Between calls, ``update`` swaps in a new linear term or bounds
    without touching the factorization; ``solve`` then continues from
    the previous primal/dual point unless told to start cold.  One
    instance per thread: the workspace is mutable.
    """

    def __init__(self, problem: QpProblem,
                 settings: SolverSettings | None = None):
        self.problem = problem
        self.settings = settings if settings is not None else SolverSettings()
        st = self.settings
        p, q, a = problem.hessian, problem.linear, problem.constraints
        n, m = problem.n, problem.n_constraints

        shift = 1e-9 * max(float(np.trace(p)) / max(n, 1), 1.0)
        try:
            np.linalg.cholesky(p + shift * np.eye(n))
        except np.linalg.LinAlgError:
            raise ValueError("Hessian is not positive semidefinite")

        if st.scaling_iters > 0:
            self._ps, self._qs, self._as, self._d, self._e, self._c = \
                _ruiz(p, q, a, st.scaling_iters)
        else:
            self._ps, self._qs, self._as = p.copy(), q.copy(), a.copy()
            self._d, self._e, self._c = np.ones(n), np.ones(m), 1.0
        self._ls = self._e * problem.lower
        self._us = self._e * problem.upper

        self._row_kind = self._classify_rows(problem.lower, problem.upper)
        self._rho_base = st.rho
        self._rho = self._rho_vector(self._rho_base)
        self._factor()

        self._x = np.zeros(n)       # scaled iterates
        self._z = np.clip(np.zeros(m), self._ls, self._us)
        self._y = np.zeros(m)
        self._polish_key = None     # cached active-set factorization
        self._polish_kkt = None
        self._polish_lu = None
        self._polish_act = None
        self._polish_side = None
        self.factor_count = 1
        self.last_iterations = 0
        self.fast_path_count = 0

    # -- setup ---------------------------------------------------------

    @staticmethod
    def _classify_rows(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        kind = np.zeros(lo.size, dtype=np.int8)   # 0 inequality
        kind[np.isclose(lo, hi)] = 1              # 1 equality
        kind[np.isinf(lo) & np.isinf(hi)] = 2     # 2 unconstrained row
        return kind

    def _rho_vector(self, base: float) -> np.ndarray:
        rho = np.full(self._row_kind.size, base)
        rho[self._row_kind == 1] = base * _RHO_EQ
        rho[self._row_kind == 2] = base * _RHO_LOOSE
        return rho

    def _factor(self) -> None:
        n = self._ps.shape[0]
        kkt = self._ps + self.settings.sigma * np.eye(n)
        if self._as.shape[0]:
            kkt += self._as.T @ (self._rho[:, None] * self._as)
        self._chol = cho_factor(kkt, lower=True, check_finite=False)

    # -- public API ----------------------------------------------------

    def update(self, linear: np.ndarray | None = None,
               lower: np.ndarray | None = None,
               upper: np.ndarray | None = None) -> None:
        """Swap the step-varying pieces; refactor only if row types flip."""
        pr = self.problem
        if linear is not None:
            ln = np.asarray(linear, dtype=float).ravel()
            if ln.size != pr.n:
                raise ValueError("linear term has wrong length")
            pr.linear = ln
            self._qs = self._c * self._d * ln
        if lower is not None:
            pr.lower = np.asarray(lower, dtype=float).ravel()
            self._ls = self._e * pr.lower
        if upper is not None:
            pr.upper = np.asarray(upper, dtype=float).ravel()
            self._us = self._e * pr.upper
        if lower is not None or upper is not None:
            if np.any(pr.lower > pr.upper):
                raise ValueError("lower bound exceeds upper bound")
            kind = self._classify_rows(pr.lower, pr.upper)
            if not np.array_equal(kind, self._row_kind):
                self._row_kind = kind
                self._rho = self._rho_vector(self._rho_base)
                self._factor()
                self.factor_count += 1

    def warm_start(self, x: np.ndarray | None = None,
                   y: np.ndarray | None = None) -> None:
        if x is not None:
            self._x = np.asarray(x, dtype=float) / self._d
        if y is not None and self._e.size:
            self._y = self._c * np.asarray(y, dtype=float) / self._e
        if self._as.shape[0]:
            self._z = np.clip(self._as @ self._x, self._ls, self._us)

    def solve(self, cold: bool = False) -> QpSolution:
        st = self.settings
        t0 = time.perf_counter()
        n, m = self.problem.n, self.problem.n_constraints
        if cold:
            self._x = np.zeros(n)
            self._z = np.clip(np.zeros(m), self._ls, self._us)
            self._y = np.zeros(m)
        elif st.polish and self._polish_lu is not None:
            # receding-horizon fast path: if the previous step's active
            # set still certifies optimal against the updated data, its
            # cached factorization answers without any splitting iterations
            sol = self._try_cached_active_set()
            if sol is not None:
                self.fast_path_count += 1
                self.last_iterations = 0
                sol.solve_time = time.perf_counter() - t0
                return sol
        x, z, y = self._x, self._z, self._y
        a = self._as
        rho = self._rho      # refreshed after any adaptation below
        sigma, alpha = st.sigma, st.alpha
        status = "max_iter"
        iters = st.max_iter
        r_prim = r_dual = float("inf")
        adapt_at = 0         # penalty adaptation runs on its own cadence

        for k in range(1, st.max_iter + 1):
            rhs = sigma * x - self._qs
            if m:
                rhs = rhs + a.T @ (rho * z - y)
            xt = cho_solve(self._chol, rhs, check_finite=False)
            x_prev, y_prev = x, y
            x = alpha * xt + (1.0 - alpha) * x
            if m:
                zt = a @ xt
                z_mix = alpha * zt + (1.0 - alpha) * z
                z_new = np.clip(z_mix + y / rho, self._ls, self._us)
                y = y + rho * (z_mix - z_new)
                z = z_new
            if k % st.check_every == 0 or k == st.max_iter:
                r_prim, r_dual, e_prim, e_dual, _ = self._residuals(x, z, y)
                if r_prim <= e_prim and r_dual <= e_dual:
                    status, iters = "solved", k
                    break
                cert = self._infeasibility(x - x_prev, y - y_prev)
                if cert is not None:
                    status, iters = cert, k
                    break
                if st.adaptive_rho and k - adapt_at >= _ADAPT_SPACING:
                    adapt_at = k
                    self._maybe_adapt(r_prim / e_prim, r_dual / e_dual)
                    rho = self._rho

        self._x, self._z, self._y = x, z, y
        self.last_iterations = iters
        x_out = self._d * x
        y_out = self._e * y / self._c if m else np.zeros(0)
        sol = QpSolution(
            x=x_out, y=y_out, status=status, iterations=iters,
            primal_residual=r_prim, dual_residual=r_dual,
            solve_time=0.0, objective=self.problem.objective(x_out))
        if status == "solved" and st.polish:
            self._polish(sol)
        sol.solve_time = time.perf_counter() - t0
        return sol

    # -- internals -----------------------------------------------------

    def _residuals(self, x, z, y):
        """Unscaled residual norms plus the relative-tolerance scales."""
        pr, st = self.problem, self.settings
        m = pr.n_constraints
        x_u = self._d * x
        px = pr.hessian @ x_u
        if m:
            z_u = z / self._e
            y_u = self._e * y / self._c
            ax = pr.constraints @ x_u
            aty = pr.constraints.T @ y_u
            r_prim = float(np.abs(ax - z_u).max())
            n_ax, n_z = float(np.abs(ax).max()), float(np.abs(z_u).max())
            n_aty = float(np.abs(aty).max())
        else:
            aty = 0.0
            r_prim, n_ax, n_z, n_aty = 0.0, 0.0, 0.0, 0.0
        r_dual = float(np.abs(px + pr.linear + aty).max())
        n_px = float(np.abs(px).max())
        n_q = float(np.abs(pr.linear).max()) if pr.linear.size else 0.0
        e_prim = st.eps_abs + st.eps_rel * max(n_ax, n_z)
        e_dual = st.eps_abs + st.eps_rel * max(n_px, n_aty, n_q)
        return r_prim, r_dual, e_prim, e_dual, (n_ax, n_z, n_px, n_aty, n_q)

    def _infeasibility(self, dx_s, dy_s) -> str | None:
        """OSQP-style one-step difference certificates, unscaled."""
        pr, eps = self.problem, self.settings.eps_infeasible
        m = pr.n_constraints
        if m:
            dy = self._e * dy_s / self._c
            nrm = float(np.abs(dy).max())
            if nrm > 1e-13:
                dyn = dy / nrm
                if float(np.abs(pr.constraints.T @ dyn).max()) <= eps:
                    pos, neg = dyn > eps, dyn < -eps
                    if not (np.any(np.isinf(pr.upper[pos]))
                            or np.any(np.isinf(pr.lower[neg]))):
                        support = float(pr.upper[pos] @ dyn[pos]
                                        + pr.lower[neg] @ dyn[neg])
                        if support <= -eps:
                            return "primal_infeasible"
        dx = self._d * dx_s
        nrm = float(np.abs(dx).max())
        if nrm > 1e-13:
            dxn = dx / nrm
            if (float(np.abs(pr.hessian @ dxn).max()) <= eps
                    and float(pr.linear @ dxn) <= -eps):
                ok = True
                if m:
                    adx = pr.constraints @ dxn
                    up_f = np.isfinite(pr.upper)
                    lo_f = np.isfinite(pr.lower)
                    ok = (np.all(adx[up_f & lo_f] <= eps)
                          and np.all(adx[up_f & lo_f] >= -eps)
                          and np.all(adx[up_f & ~lo_f] <= eps)
                          and np.all(adx[~up_f & lo_f] >= -eps))
                if ok:
                    return "dual_infeasible"
        return None

    def _maybe_adapt(self, prim_margin, dual_margin) -> None:
        """Rebalance the penalty from each residual's distance to its own
        termination threshold.  The thresholds' absolute floor keeps the
        ratio meaningful even when an iterate parks on a degenerate scale
        (e.g. a solution at the origin), where raw residual norms would
        suggest endless one-sided growth."""
        ratio = prim_margin / max(dual_margin, 1e-12)
        scale = float(np.clip(np.sqrt(ratio), 1e-2, 1e2))
        if scale > _ADAPT_TRIGGER or scale < 1.0 / _ADAPT_TRIGGER:
            new_base = float(np.clip(self._rho_base * scale, _RHO_MIN, _RHO_MAX))
            if new_base != self._rho_base:
                # keep the scaled duals consistent with the new penalty
                self._rho_base = new_base
                self._rho = self._rho_vector(new_base)
                self._factor()
                self.factor_count += 1

    def _try_cached_active_set(self) -> QpSolution | None:
        """Solve assuming the previously polished active set still holds.

        The cached KKT factorization is valid for any linear term and any
        bound values, so one pair of triangular solves produces a
        candidate.  It is returned only when a full KKT audit at the
        configured tolerances certifies it: primal feasibility on every
        row, stationarity, and correctly signed multipliers.  Any failure
        falls back to the splitting iterations, so this path can change
        speed but never the answer quality.
        """
        pr, st = self.problem, self.settings
        act, side = self._polish_act, self._polish_side
        n = pr.n
        b_act = np.where(side[act] < 0, pr.lower[act], pr.upper[act])
        if not np.isfinite(b_act).all():
            return None
        kkt, factors = self._polish_kkt, self._polish_lu
        rhs = np.concatenate([-pr.linear, b_act])
        sol_v = lu_solve(factors, rhs, check_finite=False)
        resid = rhs - kkt @ sol_v
        sol_v += lu_solve(factors, resid, check_finite=False)
        if not np.isfinite(sol_v).all():
            return None
        x = sol_v[:n]
        y = np.zeros(pr.n_constraints)
        y[act] = sol_v[n:]

        ax = pr.constraints @ x
        n_ax = float(np.abs(ax).max()) if ax.size else 0.0
        e_prim = st.eps_abs + st.eps_rel * n_ax
        if (np.any(ax < pr.lower - e_prim)
                or np.any(ax > pr.upper + e_prim)):
            return None
        px = pr.hessian @ x
        aty = pr.constraints.T @ y
        dual_vec = px + pr.linear + aty
        e_dual = st.eps_abs + st.eps_rel * max(
            float(np.abs(px).max()), float(np.abs(aty).max()),
            float(np.abs(pr.linear).max()) if pr.linear.size else 0.0)
        if float(np.abs(dual_vec).max()) > e_dual:
            return None
        # inequality multipliers must point the right way
        wrong = ((side == 1) & (y < -e_dual)) | ((side == -1) & (y > e_dual))
        if wrong.any():
            return None

        # keep the splitting iterates consistent for later fallbacks
        self._x = x / self._d
        if pr.n_constraints:
            self._z = np.clip(self._as @ self._x, self._ls, self._us)
            self._y = self._c * y / self._e
        r_prim, r_dual, _ = kkt_residuals(pr, x, y)
        return QpSolution(
            x=x, y=y, status="solved", iterations=0,
            primal_residual=r_prim, dual_residual=r_dual,
            solve_time=0.0, objective=pr.objective(x), polished=True)

    def _polish(self, sol: QpSolution) -> None:
        """Equality-solve on the detected active set, with refinement.

        The KKT matrix depends only on which rows are active, not on the
        step's bound values, so its LU factorization is kept and reused
        as long as the active set repeats — in receding-horizon use it
        rarely changes, which turns polishing into two cheap refinement
        solves per step.
        """
        pr = self.problem
        m = pr.n_constraints
        if m == 0:
            return
        y = sol.y
        tol = 1e-9 * max(1.0, float(np.abs(y).max()))
        # equality rows always bind; the sign of their multiplier is free,
        # so membership must not depend on it or the cache key would churn
        side = np.zeros(m, dtype=np.int8)
        side[y < -tol] = -1
        side[y > tol] = 1
        side[self._row_kind == 1] = 2
        act = np.flatnonzero(side)
        b_act = np.where(side[act] < 0, pr.lower[act], pr.upper[act])
        if act.size and not np.isfinite(b_act).all():
            return
        n, na = pr.n, act.size
        key = side.tobytes()
        if self._polish_key != key:
            a_act = pr.constraints[act]
            kkt = np.zeros((n + na, n + na))
            kkt[:n, :n] = pr.hessian
            kkt[:n, n:] = a_act.T
            kkt[n:, :n] = a_act
            reg = np.empty(n + na)
            reg[:n] = 1e-10
            reg[n:] = -1e-10
            kkt[np.diag_indices_from(kkt)] += reg
            try:
                factors = lu_factor(kkt, check_finite=False)
            except (np.linalg.LinAlgError, ValueError):
                return
            kkt[np.diag_indices_from(kkt)] -= reg
            self._polish_key = key
            self._polish_kkt = kkt
            self._polish_lu = factors
            self._polish_act = act
            self._polish_side = side
        kkt, factors = self._polish_kkt, self._polish_lu
        rhs = np.concatenate([-pr.linear, b_act])
        sol_v = lu_solve(factors, rhs, check_finite=False)
        for _ in range(2):
            resid = rhs - kkt @ sol_v
            sol_v += lu_solve(factors, resid, check_finite=False)
        if not np.isfinite(sol_v).all():
            return
        x_new = sol_v[:n]
        y_new = np.zeros(m)
        y_new[act] = sol_v[n:]
        old = _kkt_max(pr, sol.x, sol.y)
        new = _kkt_max(pr, x_new, y_new)
        if new < old:
            sol.x, sol.y = x_new, y_new
            sol.objective = pr.objective(x_new)
            sol.primal_residual, sol.dual_residual, _ = \
                kkt_residuals(pr, x_new, y_new)
            sol.polished = True


def _kkt_max(pr: QpProblem, x: np.ndarray, y: np.ndarray) -> float:
    p_res, d_res, comp = kkt_residuals(pr, x, y)
    return max(p_res, d_res, comp)


def kkt_residuals(problem: QpProblem, x: np.ndarray,
                  y: np.ndarray) -> tuple[float, float, float]:
    """Primal, dual, and complementarity norms from raw problem data.

    Deliberately independent of solver internals so it can audit any
    claimed solution.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = problem.n_constraints
    if m:
        ax = problem.constraints @ x
        viol_lo = np.maximum(problem.lower - ax, 0.0)
        viol_hi = np.maximum(ax - problem.upper, 0.0)
        primal = float(np.maximum(viol_lo, viol_hi).max())
        dual_vec = problem.hessian @ x + problem.linear + problem.constraints.T @ y
        y_pos = np.maximum(y, 0.0)
        y_neg = np.minimum(y, 0.0)
        gap_hi = np.where(np.isfinite(problem.upper), problem.upper - ax, 0.0)
        gap_lo = np.where(np.isfinite(problem.lower), ax - problem.lower, 0.0)
        comp_terms = np.concatenate([
            y_pos * np.where(np.isfinite(problem.upper), gap_hi, 1e30),
            -y_neg * np.where(np.isfinite(problem.lower), gap_lo, 1e30),
        ])
        comp = float(np.abs(comp_terms).max()) if comp_terms.size else 0.0
    else:
        primal = 0.0
        dual_vec = problem.hessian @ x + problem.linear
        comp = 0.0
    dual = float(np.abs(dual_vec).max()) if dual_vec.size else 0.0
    return primal, dual, comp


def solve(problem: QpProblem, settings: SolverSettings | None = None,
          warm: tuple[np.ndarray, np.ndarray] | None = None) -> QpSolution:
    """One-shot convenience wrapper around DenseQpSolver."""
    solver = DenseQpSolver(problem, settings)
    if warm is not None:
        solver.warm_start(*warm)
        return solver.solve()
    return solver.solve(cold=True)
