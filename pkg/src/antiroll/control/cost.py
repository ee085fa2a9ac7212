"""Closed-loop performance accounting shared by all controllers."""

from __future__ import annotations

import numpy as np

from ..data import TrajectoryLog
from .runtime import reference_block

__all__ = ["closed_loop_cost"]


def closed_loop_cost(log_data: TrajectoryLog, u_ref, y_ref,
                     input_weights, output_weights) -> float:
    """Sum of per-sample weighted squared tracking errors over a run.

    References may be single samples (held constant) or full sequences
    aligned with the log; weights are per-channel.
    """
    steps = log_data.length
    m, p = log_data.n_inputs, log_data.n_outputs
    ur = reference_block(u_ref, steps, m, "u_ref")
    yr = reference_block(y_ref, steps, p, "y_ref")
    rw = np.atleast_1d(np.asarray(input_weights, dtype=float))
    qw = np.atleast_1d(np.asarray(output_weights, dtype=float))
    if rw.size == 1:
        rw = np.full(m, float(rw[0]))
    if qw.size == 1:
        qw = np.full(p, float(qw[0]))
    if rw.shape != (m,) or qw.shape != (p,):
        raise ValueError("weights must be scalar or per-channel")
    du = log_data.u - ur
    dy = log_data.y - yr
    return float(np.sum(du * du @ rw) + np.sum(dy * dy @ qw))
