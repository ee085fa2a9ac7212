"""Problem dump/restore for offline debugging of solver behavior."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .problem import QpProblem

_MAGIC = b"ARQP"


def dump_problem(problem: QpProblem, path: str | Path) -> None:
    header = {"n": problem.n, "m": problem.n_constraints}
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for arr in (problem.hessian, problem.linear, problem.constraints,
                    problem.lower, problem.upper):
            fh.write(np.ascontiguousarray(arr, dtype=float).tobytes())


def load_problem(path: str | Path) -> QpProblem:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a QP dump")
        (head_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(head_len))
        n, m = header["n"], header["m"]

        def block(count):
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ValueError(f"{path}: truncated dump")
            return np.frombuffer(raw).copy()

        hessian = block(n * n).reshape(n, n)
        linear = block(n)
        constraints = block(m * n).reshape(m, n)
        lower = block(m)
        upper = block(m)
    return QpProblem(hessian, linear, constraints, lower, upper)
