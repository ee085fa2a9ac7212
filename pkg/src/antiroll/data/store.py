"""Binary container for data libraries: JSON header, column-major payload."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .hankel import DataLibrary, ReducedLibrary

_MAGIC = b"ARLB"
_VERSION = 1
_BLOCK_ORDER = ("u_past", "u_future", "y_past", "y_future")


def save_library(lib: DataLibrary | ReducedLibrary, path: str | Path,
                 seed: int | None = None,
                 source_hash: str | None = None) -> None:
    """Write the library with enough header to rebuild it verbatim."""
    reduced = isinstance(lib, ReducedLibrary)
    header = {
        "version": _VERSION,
        "kind": "reduced" if reduced else "full",
        "n_inputs": lib.n_inputs,
        "n_outputs": lib.n_outputs,
        "t_ini": lib.t_ini,
        "horizon": lib.horizon,
        "n_columns": lib.n_columns,
        "seed": seed,
        "source_hash": source_hash,
    }
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for name in _BLOCK_ORDER:
            block = np.asarray(getattr(lib, name), dtype=float)
            fh.write(np.asfortranarray(block).tobytes(order="F"))
        if reduced:
            fh.write(np.ascontiguousarray(lib.singular_values).tobytes())


def load_library(path: str | Path) -> DataLibrary | ReducedLibrary:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a library container")
        (head_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(head_len))
        if header.get("version") != _VERSION:
            raise ValueError(f"unsupported container version {header.get('version')}")
        m, p = header["n_inputs"], header["n_outputs"]
        t_ini, horizon = header["t_ini"], header["horizon"]
        cols = header["n_columns"]
        shapes = {
            "u_past": (m * t_ini, cols), "u_future": (m * horizon, cols),
            "y_past": (p * t_ini, cols), "y_future": (p * horizon, cols),
        }
        blocks = {}
        for name in _BLOCK_ORDER:
            rows, c = shapes[name]
            raw = fh.read(rows * c * 8)
            if len(raw) != rows * c * 8:
                raise ValueError(f"{path}: truncated block {name}")
            blocks[name] = np.frombuffer(raw).reshape((rows, c), order="F").copy()
        common = dict(n_inputs=m, n_outputs=p, t_ini=t_ini, horizon=horizon,
                      **blocks)
        if header["kind"] == "reduced":
            raw = fh.read(cols * 8)
            sv = np.frombuffer(raw).copy()
            return ReducedLibrary(singular_values=sv, **common)
        return DataLibrary(**common)


def read_header(path: str | Path) -> dict:
    """Header alone, for provenance checks without loading the payload."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a library container")
        (head_len,) = struct.unpack("<I", fh.read(4))
        return json.loads(fh.read(head_len))
