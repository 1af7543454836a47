"""CSV/JSON serialization with round-trip-exact float formatting.

Every float is written with 17 significant digits (``%.17g``), which is
enough to reproduce any IEEE double exactly on reading.
"""

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import DomainError
from .paths import SampledPath

__all__ = [
    "fmt",
    "dumps",
    "write_json",
    "read_json",
    "write_table",
    "write_path",
    "read_path",
    "write_increments",
]

FLOAT_FORMAT = "%.17g"


def fmt(x) -> str:
    """17-significant-digit text for a finite float; ``nan``/``inf`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FORMAT % x


def _prepare(obj, floats):
    # replace floats by placeholder strings so json handles the structure
    if isinstance(obj, dict):
        return {str(k): _prepare(v, floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v, floats) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist(), floats)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        floats.append(FLOAT_FORMAT % x)
        return f"\x00{len(floats) - 1}\x00"
    if isinstance(obj, complex):
        return {"re": _prepare(obj.real, floats), "im": _prepare(obj.imag, floats)}
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return _prepare(obj.to_dict(), floats)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """``json.dumps`` with every float rendered as ``%.17g``; non-finite floats become null."""
    floats = []
    text = json.dumps(_prepare(obj, floats), indent=indent, sort_keys=False)
    parts = text.split('"\\u0000')
    out = [parts[0]]
    for part in parts[1:]:
        idx, rest = part.split('\\u0000"', 1)
        out.append(floats[int(idx)])
        out.append(rest)
    return "".join(out)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise DomainError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})") from exc


def write_table(path, header, rows) -> Path:
    """CSV with a header row; floats as ``%.17g``, other cells via ``str``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(c) if isinstance(c, (float, np.floating)) else c for c in row])
    return path


def write_path(path, sp: SampledPath, meta: dict = None) -> Path:
    """Write ``t,y1..yd`` CSV plus a ``<stem>.json`` metadata sidecar."""
    path = Path(path)
    header = ["t"] + [f"y{j + 1}" for j in range(sp.d)]
    t = sp.t
    write_table(path, header, ([float(t[k])] + [float(v) for v in sp.y[k]] for k in range(sp.n)))
    side = {"h": sp.h, "n": sp.n, "d": sp.d, "seed": sp.seed, "model_tag": sp.model_tag}
    side.update(sp.meta)
    if meta:
        side.update(meta)
    write_json(path.with_suffix(".json"), side)
    return path


def read_path(path) -> SampledPath:
    """Read a path CSV; ``h`` comes from the sidecar if present, else from ``t``."""
    path = Path(path)
    if not path.is_file():
        raise DomainError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise DomainError(f"{path}: expected a header starting with 't'")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise DomainError(f"{path}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 2:
        raise DomainError(f"{path}: need at least one row with t and one observation column")
    side = path.with_suffix(".json")
    meta = read_json(side) if side.is_file() else {}
    h = meta.get("h")
    if h is None:
        if data.shape[0] < 2:
            raise DomainError(f"{path}: cannot infer the grid step from a single row")
        h = float(data[1, 0] - data[0, 0])
    return SampledPath(h=float(h), y=data[:, 1:], seed=meta.get("seed"), model_tag=meta.get("model_tag", ""))


def write_increments(path, inc) -> Path:
    """Recovered increments as ``n,t,delta_l`` CSV."""
    t = inc.t
    return write_table(
        path, ["n", "t", "delta_l"],
        ([k + 1, float(t[k]), float(inc.values[k])] for k in range(inc.n)),
    )


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
