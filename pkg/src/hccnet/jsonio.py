"""Canonical JSON: sorted keys, no whitespace, floats at 17 significant digits."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _render(x) -> str:
    if x is None or isinstance(x, (bool, np.bool_)):
        return json.dumps(None if x is None else bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if not math.isfinite(f):
            raise ValueError(f"non-finite number {f} has no JSON form")
        text = format(f, ".17g")
        if text in ("0", "-0") or ("." not in text and "e" not in text):
            text += ".0"
        return text
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    if isinstance(x, dict):
        items = sorted((str(k), v) for k, v in x.items())
        return "{" + ",".join(json.dumps(k, ensure_ascii=False) + ":" + _render(v) for k, v in items) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ",".join(_render(v) for v in (x.tolist() if isinstance(x, np.ndarray) else x)) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    return _render(obj)


def loads(text: str):
    return json.loads(text)


def read(path) -> object:
    return json.loads(Path(path).read_text())


def write(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")
