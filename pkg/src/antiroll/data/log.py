"""Recorded input/output trajectories and their CSV round trip."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class TrajectoryLog:
    """One recorded run: inputs row-per-sample, outputs likewise.

    ``u`` has shape (T, m), ``y`` has shape (T, p).  Units follow the
    controller boundary: steering wheel angle in degrees and speed in
    km/h on the input side, load-transfer ratio on the output side.
    """

    u: np.ndarray
    y: np.ndarray
    sample_period: float

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if u.ndim != 2 or y.ndim != 2:
            raise ValueError("u and y must be 2-D (samples x channels)")
        if u.shape[0] != y.shape[0]:
            raise ValueError(
                f"length mismatch: {u.shape[0]} inputs vs {y.shape[0]} outputs")
        if not (np.isfinite(u).all() and np.isfinite(y).all()):
            raise ValueError("log contains non-finite samples")
        if self.sample_period <= 0:
            raise ValueError("sample period must be positive")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    @property
    def length(self) -> int:
        return self.u.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.u.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.y.shape[1]

    def content_hash(self) -> str:
        """Stable hex digest of the samples, for provenance headers."""
        h = hashlib.sha256()
        h.update(np.float64(self.sample_period).tobytes())
        h.update(np.ascontiguousarray(self.u).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()

    def slice(self, start: int, stop: int) -> "TrajectoryLog":
        return TrajectoryLog(self.u[start:stop].copy(),
                             self.y[start:stop].copy(), self.sample_period)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = (["t"]
                      + [f"u{k}" for k in range(self.n_inputs)]
                      + [f"y{k}" for k in range(self.n_outputs)])
            writer.writerow(header)
            for i in range(self.length):
                row = [repr(float(i * self.sample_period))]
                row += [repr(float(v)) for v in self.u[i]]
                row += [repr(float(v)) for v in self.y[i]]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrajectoryLog":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            m = sum(1 for c in header if c.startswith("u"))
            p = sum(1 for c in header if c.startswith("y"))
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.asarray(rows)
        if data.shape[0] < 2:
            raise ValueError("log file too short to recover the sample period")
        period = data[1, 0] - data[0, 0]
        return cls(data[:, 1:1 + m], data[:, 1 + m:1 + m + p], period)
