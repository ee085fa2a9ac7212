"""Flat key-value config files.

One ``key = value`` pair per line, ``#`` starts a comment, blank lines are
skipped.  Values parse as int, float, bool (``true``/``false``), a
comma-separated list of numbers, or fall back to a plain string.  Keys are
case-sensitive.  This is intentionally dumb: no sections, no interpolation,
no nesting.
"""

from __future__ import annotations

import os
from typing import Any


def _parse_scalar(text: str) -> Any:
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_value(text: str) -> Any:
    text = text.strip()
    if "," in text:
        parts = [p.strip() for p in text.split(",") if p.strip() != ""]
        vals = [_parse_scalar(p) for p in parts]
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            return [float(v) for v in vals]
        return vals
    return _parse_scalar(text)


def loads(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(val)
    return out


def load(path: str | os.PathLike) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(values: dict[str, Any]) -> str:
    lines = []
    for key, val in values.items():
        if isinstance(val, (list, tuple)):
            rendered = ", ".join(repr(float(v)) for v in val)
        elif isinstance(val, bool):
            rendered = "true" if val else "false"
        else:
            rendered = repr(val) if isinstance(val, float) else str(val)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def dump(values: dict[str, Any], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(values))
