"""Problem, settings, and solution containers for the dense QP solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class QpProblem:
    """minimize 1/2 x'Px + q'x  subject to  l <= Ax <= u.

    P is symmetrized on ingest; asymmetry beyond a relative tolerance is
    rejected rather than silently averaged away.  Infinite bounds mark
    one-sided or absent constraints.  Equality rows are expressed as
    l[i] == u[i].
    """

    def __init__(self, hessian: np.ndarray, linear: np.ndarray,
                 constraints: np.ndarray | None = None,
                 lower: np.ndarray | None = None,
                 upper: np.ndarray | None = None):
        p = np.array(hessian, dtype=float)
        q = np.array(linear, dtype=float).ravel()
        n = q.size
        if p.shape != (n, n):
            raise ValueError(f"Hessian shape {p.shape} does not match n={n}")
        scale = max(float(np.abs(p).max()), 1.0)
        if np.abs(p - p.T).max() > 1e-8 * scale:
            raise ValueError("Hessian is not symmetric")
        p = 0.5 * (p + p.T)
        if constraints is None:
            a = np.zeros((0, n))
        else:
            a = np.array(constraints, dtype=float)
            if a.ndim != 2 or a.shape[1] != n:
                raise ValueError(f"constraint matrix must have {n} columns")
        m = a.shape[0]
        lo = np.full(m, -np.inf) if lower is None else \
            np.array(lower, dtype=float).ravel()
        hi = np.full(m, np.inf) if upper is None else \
            np.array(upper, dtype=float).ravel()
        if lo.size != m or hi.size != m:
            raise ValueError("bound lengths must match constraint rows")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if not (np.isfinite(p).all() and np.isfinite(q).all()
                and np.isfinite(a).all()):
            raise ValueError("P, q, A must be finite")
        self.hessian = p
        self.linear = q
        self.constraints = a
        self.lower = lo
        self.upper = hi

    @property
    def n(self) -> int:
        return self.linear.size

    @property
    def n_constraints(self) -> int:
        return self.constraints.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.hessian @ x + self.linear @ x)


@dataclass(frozen=True)
class SolverSettings:
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 20000
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6               # over-relaxation
    adaptive_rho: bool = True
    polish: bool = True
    check_every: int = 25
    scaling_iters: int = 10
    eps_infeasible: float = 1e-7

    def __post_init__(self):
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.alpha < 2:
            raise ValueError("relaxation must lie in (0, 2)")


@dataclass
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    status: str                      # solved / max_iter / primal_infeasible / dual_infeasible
    iterations: int
    primal_residual: float
    dual_residual: float
    solve_time: float
    objective: float = field(default=float("nan"))
    polished: bool = False

    @property
    def solved(self) -> bool:
        return self.status == "solved"
