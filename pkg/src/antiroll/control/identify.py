"""Linear model identification from recorded input/output logs.

The route is regression-then-realization: a lagged linear predictor is
fit by least squares, unrolled into impulse-response terms, and those
are factored through a singular-value decomposition into a state-space
realization of the requested order.  On noise-free data from a linear
plant of that order the recovery is exact to rounding; on real vehicle
logs the reported held-out fit says how far the linear picture carries.

Signals are centered on their training means and the offsets ride along
on the model, so downstream consumers can move between physical and
deviation coordinates without re-deriving the operating point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..data import TrajectoryLog
from ..data.hankel import build_hankel, numerical_rank

log = logging.getLogger(__name__)

__all__ = ["FitReport", "IdentificationError", "LinearModel",
           "identify_state_space", "load_model", "save_model"]


class IdentificationError(ValueError):
    """Raised when the regression cannot support the requested model."""


@dataclass(frozen=True)
class FitReport:
    """Held-out simulation quality of an identified model.

    ``nrms`` is per output channel: simulation error RMS divided by the
    channel's deviation RMS, so 0 is perfect and about 1 means the model
    explains nothing.
    """

    nrms: np.ndarray
    training_samples: int
    holdout_samples: int
    spectral_radius: float

    @property
    def nrms_max(self) -> float:
        return float(np.max(self.nrms))


@dataclass(frozen=True)
class LinearModel:
    """Discrete-time state-space quadruple with operating-point offsets.

    The model lives in deviation coordinates: subtract ``u_offset`` and
    ``y_offset`` from physical signals before driving it, add them back
    after.  ``fit`` carries the identification report when the model
    came from data.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    order: int
    u_offset: np.ndarray = field(default=None)
    y_offset: np.ndarray = field(default=None)
    fit: FitReport | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        n = self.order
        if a.shape != (n, n):
            raise ValueError(f"state matrix must be {n}x{n}, got {a.shape}")
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if b.ndim != 2 or b.shape[0] != n:
            raise ValueError("input matrix rows must match the order")
        if c.ndim != 2 or c.shape[1] != n:
            raise ValueError("output matrix columns must match the order")
        if d.shape != (c.shape[0], b.shape[1]):
            raise ValueError("feedthrough shape must be outputs x inputs")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        for name, dim in (("u_offset", b.shape[1]), ("y_offset", c.shape[0])):
            off = getattr(self, name)
            off = np.zeros(dim) if off is None else \
                np.asarray(off, dtype=float).ravel()
            if off.shape != (dim,):
                raise ValueError(f"{name} must have length {dim}")
            object.__setattr__(self, name, off)

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.a))))

    def simulate(self, u: np.ndarray, x0: np.ndarray | None = None,
                 physical: bool = False) -> np.ndarray:
        """Roll the model forward under an input sequence.

        ``physical`` interprets inputs as raw signals (offsets removed
        on the way in, restored on the way out).
        """
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if physical:
            u = u - self.u_offset
        x = np.zeros(self.order) if x0 is None else \
            np.asarray(x0, dtype=float).ravel()
        out = np.empty((u.shape[0], self.n_outputs))
        for k in range(u.shape[0]):
            out[k] = self.c @ x + self.d @ u[k]
            x = self.a @ x + self.b @ u[k]
        if physical:
            out = out + self.y_offset
        return out

    def markov_parameters(self, count: int) -> np.ndarray:
        """First ``count`` impulse-response blocks, feedthrough first."""
        blocks = np.empty((count, self.n_outputs, self.n_inputs))
        blocks[0] = self.d
        reach = self.b
        for k in range(1, count):
            blocks[k] = self.c @ reach
            reach = self.a @ reach
        return blocks


def _lagged_regression(segments: "list[tuple[np.ndarray, np.ndarray]]",
                       order: int):
    """Least-squares predictor of y from its own and the input's lags.

    A trailing intercept column absorbs whatever constant drive the
    mean-centering left behind — sample means are generally not an
    equilibrium pair of the underlying system, and without the intercept
    that inconsistency would smear across the dynamic coefficients.

    Each (u, y) segment contributes its own rows, so lag windows never
    straddle the seam between two recordings.
    """
    m = segments[0][0].shape[1]
    p = segments[0][1].shape[1]
    cols = order * p + (order + 1) * m
    reg_parts, target_parts = [], []
    for u, y in segments:
        t_len = y.shape[0]
        rows = t_len - order
        reg = np.empty((rows, cols + 1))
        for j in range(1, order + 1):
            reg[:, (j - 1) * p:j * p] = y[order - j:t_len - j]
        base = order * p
        for j in range(order + 1):
            reg[:, base + j * m:base + (j + 1) * m] = u[order - j:t_len - j]
        reg[:, cols] = 1.0
        reg_parts.append(reg)
        target_parts.append(y[order:])
    # output lags are always partly collinear with the state the input
    # lags reach (benign: the minimum-norm fit still recovers the true
    # response), so rank-deficiency is judged on the input block alone
    hank = np.hstack([build_hankel(u, order + 1) for u, _ in segments])
    rank = numerical_rank(hank)
    if rank < hank.shape[0]:
        raise IdentificationError(
            "input block of the lagged regression is rank deficient "
            f"({rank} of {hank.shape[0]}); the log "
            f"does not excite order {order}")
    theta, _, _, _ = np.linalg.lstsq(
        np.vstack(reg_parts), np.vstack(target_parts), rcond=None)
    full = theta.T
    return full[:, :cols], full[:, cols]  # dynamics (p, cols), intercept (p,)


def _predictor_impulse(theta: np.ndarray, order: int, m: int, p: int,
                       count: int) -> np.ndarray:
    """Unroll the lagged predictor into impulse-response blocks."""
    y_coef = [theta[:, (j - 1) * p:j * p] for j in range(1, order + 1)]
    base = order * p
    u_coef = [theta[:, base + j * m:base + (j + 1) * m]
              for j in range(order + 1)]
    blocks = np.zeros((count, p, m))
    for k in range(count):
        acc = u_coef[k].copy() if k <= order else np.zeros((p, m))
        for j in range(1, min(k, order) + 1):
            acc += y_coef[j - 1] @ blocks[k - j]
        blocks[k] = acc
    return blocks


def _realize(impulse: np.ndarray, order: int) -> tuple[np.ndarray, ...]:
    """State-space realization from impulse-response blocks.

    Builds the block-Hankel matrix of the response, factors it by SVD,
    and reads the quadruple off the balanced factors.
    """
    count, p, m = impulse.shape
    depth = (count - 2) // 2
    h_now = np.vstack([np.hstack([impulse[i + j + 1] for j in range(depth)])
                       for i in range(depth)])
    h_next = np.vstack([np.hstack([impulse[i + j + 2] for j in range(depth)])
                        for i in range(depth)])
    w, sv, vt = np.linalg.svd(h_now, full_matrices=False)
    if sv[0] == 0.0 or sv[order - 1] / sv[0] < 1e-10:
        raise IdentificationError(
            f"impulse response supports rank {numerical_rank(h_now)}, "
            f"less than the requested order {order}")
    root = np.sqrt(sv[:order])
    obs = w[:, :order] * root
    reach = (vt[:order].T * root).T
    a = (w[:, :order] / root).T @ h_next @ (vt[:order].T / root)
    b = reach[:, :m]
    c = obs[:p, :]
    d = impulse[0]
    return a, b, c, d


def _holdout_nrms(model: LinearModel, u: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Simulation error on a window, best-case over the initial state.

    The window's initial state is itself a least-squares fit, so the
    metric isolates how well the dynamics carry the window rather than
    penalizing an unknown starting point.
    """
    steps = u.shape[0]
    forced = model.simulate(u)
    obs = np.empty((steps, model.n_outputs, model.order))
    reach = np.eye(model.order)
    for k in range(steps):
        obs[k] = model.c @ reach
        reach = model.a @ reach
    flat_obs = obs.reshape(steps * model.n_outputs, model.order)
    resid = (y - forced).ravel()
    x0, _, _, _ = np.linalg.lstsq(flat_obs, resid, rcond=None)
    sim = forced + (flat_obs @ x0).reshape(steps, model.n_outputs)
    err = np.sqrt(np.mean((y - sim) ** 2, axis=0))
    scale = np.sqrt(np.mean((y - y.mean(axis=0)) ** 2, axis=0))
    scale = np.where(scale > 0, scale, 1.0)
    return err / scale


def identify_state_space(log_data: TrajectoryLog | Sequence[TrajectoryLog],
                         order: int, holdout: float = 0.2) -> LinearModel:
    """Fit a state-space model of the given order to recorded logs.

    ``log_data`` is one log or several; with several, each recording
    contributes its own regression rows and lag windows never cross a
    recording boundary.  The tail of the last log is held out and scores
    the realized model by free simulation.  The returned model carries
    the fit report and the training-mean offsets.
    """
    logs = [log_data] if isinstance(log_data, TrajectoryLog) else list(log_data)
    if not logs:
        raise ValueError("need at least one log")
    if order < 1:
        raise ValueError("order must be at least 1")
    if not 0.0 < holdout < 0.5:
        raise ValueError("holdout fraction must lie in (0, 0.5)")
    m, p = logs[0].n_inputs, logs[0].n_outputs
    for other in logs[1:]:
        if other.n_inputs != m or other.n_outputs != p:
            raise ValueError("logs disagree on channel counts")

    last = logs[-1]
    split = int(round(last.length * (1.0 - holdout)))
    train_u = [np.asarray(lg.u, dtype=float) for lg in logs[:-1]]
    train_y = [np.asarray(lg.y, dtype=float) for lg in logs[:-1]]
    train_u.append(np.asarray(last.u, dtype=float)[:split])
    train_y.append(np.asarray(last.y, dtype=float)[:split])
    total_train = sum(seg.shape[0] for seg in train_u)
    min_train = 4 * (order * (m + p) + 1)
    if any(seg.shape[0] <= 2 * order for seg in train_u):
        raise ValueError("every training segment must exceed twice the order")
    if total_train < min_train or last.length - split < 4 * order:
        raise ValueError("log too short for this order and holdout split")
    u_off = np.vstack(train_u).mean(axis=0)
    y_off = np.vstack(train_y).mean(axis=0)

    theta, intercept = _lagged_regression(
        [(u - u_off, y - y_off) for u, y in zip(train_u, train_y)], order)
    # fold the intercept into the output offset: shifting the output
    # channel by (I - sum of its own-lag coefficients)^+ @ intercept
    # turns the affine predictor into an exactly linear one
    lag_sum = np.zeros((p, p))
    for j in range(1, order + 1):
        lag_sum += theta[:, (j - 1) * p:j * p]
    shift, _, _, _ = np.linalg.lstsq(np.eye(p) - lag_sum, intercept, rcond=None)
    y_off = y_off + shift
    depth = max(2 * order + 2, 12)
    impulse = _predictor_impulse(theta, order, m, p, 2 * depth + 2)
    a, b, c, d = _realize(impulse, order)
    model = LinearModel(a=a, b=b, c=c, d=d, order=order,
                        u_offset=u_off, y_offset=y_off)
    nrms = _holdout_nrms(model, np.asarray(last.u, dtype=float)[split:] - u_off,
                         np.asarray(last.y, dtype=float)[split:] - y_off)
    radius = model.spectral_radius
    if radius >= 1.0:
        log.warning("identified model is unstable (spectral radius %.4f)",
                    radius)
    report = FitReport(nrms=nrms, training_samples=total_train,
                       holdout_samples=last.length - split,
                       spectral_radius=radius)
    return LinearModel(a=a, b=b, c=c, d=d, order=order,
                       u_offset=u_off, y_offset=y_off, fit=report)


def save_model(model: LinearModel, path: str | Path) -> None:
    """Persist a model (and its fit report, if any) to an .npz file."""
    arrays = {
        "a": model.a, "b": model.b, "c": model.c, "d": model.d,
        "order": np.int64(model.order),
        "u_offset": model.u_offset, "y_offset": model.y_offset,
    }
    if model.fit is not None:
        arrays.update(
            fit_nrms=model.fit.nrms,
            fit_counts=np.array([model.fit.training_samples,
                                 model.fit.holdout_samples], dtype=np.int64),
            fit_spectral_radius=np.float64(model.fit.spectral_radius))
    np.savez(path, **arrays)


def load_model(path: str | Path) -> LinearModel:
    """Inverse of :func:`save_model`."""
    with np.load(path) as data:
        fit = None
        if "fit_nrms" in data:
            counts = data["fit_counts"]
            fit = FitReport(nrms=data["fit_nrms"],
                            training_samples=int(counts[0]),
                            holdout_samples=int(counts[1]),
                            spectral_radius=float(data["fit_spectral_radius"]))
        return LinearModel(a=data["a"], b=data["b"], c=data["c"], d=data["d"],
                           order=int(data["order"]),
                           u_offset=data["u_offset"], y_offset=data["y_offset"],
                           fit=fit)
