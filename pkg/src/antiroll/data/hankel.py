"""Block-Hankel machinery: construction, excitation rank, partitioning,
SVD reduction, and trajectory membership.

A length-T multichannel sequence unrolls into a (dim*L) x (T-L+1) matrix
whose column j stacks samples j..j+L-1 channel-blockwise.  Everything
downstream (the data library, its reduced form, membership residuals)
is a view on that one construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .log import TrajectoryLog


def build_hankel(seq: np.ndarray, depth: int) -> np.ndarray:
    """Block-Hankel matrix of a (T,) or (T, dim) sample sequence."""
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("sequence must be 1-D or 2-D (samples x channels)")
    t_len, dim = arr.shape
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if t_len < depth:
        raise ValueError(f"need at least {depth} samples, got {t_len}")
    cols = t_len - depth + 1
    out = np.empty((dim * depth, cols))
    for i in range(depth):
        out[dim * i:dim * (i + 1), :] = arr[i:i + cols].T
    return out


def numerical_rank(mat: np.ndarray) -> int:
    """Rank by the conservative singular-value cutoff."""
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    cutoff = max(mat.shape) * np.finfo(float).eps * sv[0]
    return int(np.sum(sv > cutoff))


def check_persistent_excitation(seq: np.ndarray, order: int) -> dict:
    """Full-row-rank test of the depth-``order`` Hankel matrix."""
    h = build_hankel(seq, order)
    rank = numerical_rank(h)
    return {"is_pe": rank == h.shape[0], "numerical_rank": rank,
            "required_rank": h.shape[0]}


@dataclass(frozen=True)
class DataLibrary:
    """Past/future-partitioned Hankel blocks of one recorded run."""

    u_past: np.ndarray
    u_future: np.ndarray
    y_past: np.ndarray
    y_future: np.ndarray
    n_inputs: int
    n_outputs: int
    t_ini: int
    horizon: int

    def __post_init__(self):
        m, p = self.n_inputs, self.n_outputs
        expect = {
            "u_past": m * self.t_ini, "u_future": m * self.horizon,
            "y_past": p * self.t_ini, "y_future": p * self.horizon,
        }
        cols = {getattr(self, k).shape[1] for k in expect}
        if len(cols) != 1:
            raise ValueError("blocks disagree on column count")
        for k, rows in expect.items():
            if getattr(self, k).shape[0] != rows:
                raise ValueError(f"{k} must have {rows} rows")

    @property
    def n_columns(self) -> int:
        return self.u_past.shape[1]

    @property
    def depth(self) -> int:
        return self.t_ini + self.horizon

    def input_hankel(self) -> np.ndarray:
        return np.vstack([self.u_past, self.u_future])

    def output_hankel(self) -> np.ndarray:
        return np.vstack([self.y_past, self.y_future])

    def stacked(self) -> np.ndarray:
        """Input Hankel atop output Hankel, the reduction operand."""
        return np.vstack([self.input_hankel(), self.output_hankel()])


@dataclass(frozen=True)
class ReducedLibrary:
    """Library blocks compressed onto leading singular directions."""

    u_past: np.ndarray
    u_future: np.ndarray
    y_past: np.ndarray
    y_future: np.ndarray
    n_inputs: int
    n_outputs: int
    t_ini: int
    horizon: int
    singular_values: np.ndarray

    def __post_init__(self):
        sv = np.asarray(self.singular_values, dtype=float)
        if sv.ndim != 1 or sv.size != self.u_past.shape[1]:
            raise ValueError("need one singular value per retained column")
        if np.any(sv <= 0) or np.any(np.diff(sv) > 0):
            raise ValueError("singular values must be positive and descending")
        object.__setattr__(self, "singular_values", sv)

    @property
    def n_columns(self) -> int:
        return self.u_past.shape[1]

    @property
    def depth(self) -> int:
        return self.t_ini + self.horizon

    def stacked(self) -> np.ndarray:
        return np.vstack([self.u_past, self.u_future,
                          self.y_past, self.y_future])


def partition(log: TrajectoryLog, t_ini: int, horizon: int,
              pe_order_margin: int | None = None) -> DataLibrary:
    """Split the log's Hankel pair into past and future block rows.

    ``pe_order_margin`` adds a presumed system-order bound to the
    persistent-excitation check (depth t_ini + horizon + margin); the
    check only warns, it never rejects, since recorded closed-loop data
    can be useful even when formally underexcited.
    """
    depth = t_ini + horizon
    if t_ini < 1 or horizon < 1:
        raise ValueError("t_ini and horizon must be at least 1")
    if log.length < depth:
        raise ValueError(
            f"log too short: {log.length} samples for depth {depth}")
    m, p = log.n_inputs, log.n_outputs
    h_u = build_hankel(log.u, depth)
    h_y = build_hankel(log.y, depth)
    if pe_order_margin is not None:
        order = depth + pe_order_margin
        if log.length < order:
            warnings.warn(f"log too short to test excitation of order {order}")
        else:
            res = check_persistent_excitation(log.u, order)
            if not res["is_pe"]:
                warnings.warn(
                    f"input not persistently exciting of order {order}: "
                    f"rank {res['numerical_rank']} < {res['required_rank']}")
    return DataLibrary(
        u_past=h_u[:m * t_ini], u_future=h_u[m * t_ini:],
        y_past=h_y[:p * t_ini], y_future=h_y[p * t_ini:],
        n_inputs=m, n_outputs=p, t_ini=t_ini, horizon=horizon)


def concatenate(libs: "list[DataLibrary]") -> DataLibrary:
    """Join libraries column-wise into one augmented library.

    Each source library keeps its own columns, so no column ever spans
    two recordings: windows stay contiguous trajectories of whichever
    run produced them.  All sources must agree on channel counts and
    window lengths.
    """
    if not libs:
        raise ValueError("need at least one library")
    first = libs[0]
    for lib in libs[1:]:
        if isinstance(lib, ReducedLibrary) or isinstance(first, ReducedLibrary):
            raise ValueError("only full libraries can be concatenated")
        same = (lib.n_inputs == first.n_inputs
                and lib.n_outputs == first.n_outputs
                and lib.t_ini == first.t_ini
                and lib.horizon == first.horizon)
        if not same:
            raise ValueError("libraries disagree on channels or windows")
    if len(libs) == 1:
        return first
    return DataLibrary(
        u_past=np.hstack([lib.u_past for lib in libs]),
        u_future=np.hstack([lib.u_future for lib in libs]),
        y_past=np.hstack([lib.y_past for lib in libs]),
        y_future=np.hstack([lib.y_future for lib in libs]),
        n_inputs=first.n_inputs, n_outputs=first.n_outputs,
        t_ini=first.t_ini, horizon=first.horizon)


def svd_reduce(lib: DataLibrary, q: int | None = None,
               energy_tol: float | None = None) -> ReducedLibrary:
    """Compress the stacked Hankel pair onto its leading singular span.

    The stacked matrix factors as W diag(s) V^T; the reduced library is
    the first q columns of W diag(s), so its column space reproduces the
    dominant range directions while the column count drops from K to q.
    With neither ``q`` nor ``energy_tol`` given, q defaults to the full
    row count (no information loss when the matrix has full row rank).
    """
    stacked = lib.stacked()
    rows, cols = stacked.shape
    w, sv, _ = np.linalg.svd(stacked, full_matrices=False)
    if q is None:
        if energy_tol is not None:
            if not 0 < energy_tol < 1:
                raise ValueError("energy tolerance must be in (0, 1)")
            energy = np.cumsum(sv ** 2) / np.sum(sv ** 2)
            q = int(np.searchsorted(energy, 1.0 - energy_tol) + 1)
        else:
            q = min(rows, cols)
    if q <= 0:
        raise ValueError("q must be positive")
    if q > cols:
        raise ValueError(f"q={q} exceeds the column count {cols}")
    # never retain numerically dead directions
    cutoff = max(rows, cols) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    q = min(q, int(np.sum(sv > cutoff)))
    reduced = w[:, :q] * sv[:q]
    m, p, t_ini = lib.n_inputs, lib.n_outputs, lib.t_ini
    mu, my = m * lib.depth, p * lib.depth
    r_u, r_y = reduced[:mu], reduced[mu:mu + my]
    return ReducedLibrary(
        u_past=r_u[:m * t_ini], u_future=r_u[m * t_ini:],
        y_past=r_y[:p * t_ini], y_future=r_y[p * t_ini:],
        n_inputs=m, n_outputs=p, t_ini=t_ini, horizon=lib.horizon,
        singular_values=sv[:q])


def verify_trajectory_membership(lib: DataLibrary | ReducedLibrary,
                                 u_traj: np.ndarray,
                                 y_traj: np.ndarray) -> float:
    """Relative least-squares residual of the linear-combination test.

    Near zero means the candidate input/output pair lies in the span of
    the recorded behavior, i.e. it is a trajectory of the system that
    generated the library.
    """
    u = np.asarray(u_traj, dtype=float).reshape(lib.depth, lib.n_inputs)
    y = np.asarray(y_traj, dtype=float).reshape(lib.depth, lib.n_outputs)
    target = np.concatenate([u.ravel(), y.ravel()])
    mat = lib.stacked()
    sol, _, _, _ = np.linalg.lstsq(mat, target, rcond=None)
    residual = np.linalg.norm(mat @ sol - target)
    denom = np.linalg.norm(target)
    return float(residual / denom) if denom > 0 else float(residual)
