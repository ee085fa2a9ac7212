"""Independent box-QP oracles for checking the ADMM solver.

Two layers: a brute-force enumeration over active-set sign patterns,
exact but only viable for a handful of variables, and a primal
active-set iteration usable up to the acceptance sizes.  The iterative
method is itself validated against the enumeration on small instances
before being trusted as the reference at n = 50.
"""

from __future__ import annotations

import itertools

import numpy as np


def enumerate_box_qp(p: np.ndarray, q: np.ndarray, lo: np.ndarray,
                     hi: np.ndarray) -> np.ndarray:
    """Exact minimizer of a strictly convex box QP by trying every
    lower/free/upper pattern and checking the KKT sign conditions."""
    n = q.size
    best_x, best_obj = None, np.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        pattern = np.asarray(pattern)
        free = pattern == 0
        x = np.where(pattern < 0, lo, hi).astype(float)
        if free.any():
            rhs = -q[free] - p[np.ix_(free, ~free)] @ x[~free]
            try:
                x[free] = np.linalg.solve(p[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(x[free] < lo[free] - 1e-9) or \
                    np.any(x[free] > hi[free] + 1e-9):
                continue
        grad = p @ x + q
        if np.any(grad[pattern < 0] < -1e-9):
            continue
        if np.any(grad[pattern > 0] > 1e-9):
            continue
        obj = 0.5 * x @ p @ x + q @ x
        if obj < best_obj:
            best_obj, best_x = obj, x
    if best_x is None:
        raise RuntimeError("no KKT point found (problem not strictly convex?)")
    return best_x


def active_set_box_qp(p: np.ndarray, q: np.ndarray, lo: np.ndarray,
                      hi: np.ndarray, max_iter: int = 500) -> np.ndarray:
    """Primal active-set iteration for strictly convex box QPs."""
    n = q.size
    x = np.clip(np.linalg.solve(p, -q), lo, hi)
    at_lo = np.isclose(x, lo)
    at_hi = np.isclose(x, hi) & ~at_lo
    for _ in range(max_iter):
        free = ~(at_lo | at_hi)
        x_try = np.where(at_lo, lo, np.where(at_hi, hi, 0.0)).astype(float)
        if free.any():
            rhs = -q[free] - p[np.ix_(free, ~free)] @ x_try[~free]
            x_try[free] = np.linalg.solve(p[np.ix_(free, free)], rhs)
        viol_lo = free & (x_try < lo - 1e-12)
        viol_hi = free & (x_try > hi + 1e-12)
        if viol_lo.any() or viol_hi.any():
            # clamp the single worst violation and resolve
            dist = np.where(viol_lo, lo - x_try,
                            np.where(viol_hi, x_try - hi, -np.inf))
            worst = int(np.argmax(dist))
            if x_try[worst] < lo[worst]:
                at_lo[worst] = True
            else:
                at_hi[worst] = True
            continue
        grad = p @ x_try + q
        bad_lo = at_lo & (grad < -1e-12)
        bad_hi = at_hi & (grad > 1e-12)
        if not (bad_lo.any() or bad_hi.any()):
            return x_try
        release = int(np.argmax(np.abs(grad * (bad_lo | bad_hi))))
        at_lo[release] = False
        at_hi[release] = False
    raise RuntimeError("active-set iteration did not settle")


def random_box_qp(rng: np.random.Generator, n: int):
    """Strictly convex box QP with an interesting active set."""
    root = rng.standard_normal((n, n))
    p = root @ root.T + n * 0.5 * np.eye(n)
    q = rng.standard_normal(n) * n
    center = rng.standard_normal(n)
    half = rng.uniform(0.05, 1.5, size=n)
    return p, q, center - half, center + half
