"""CSV ingestion and atomic output writing."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .empirical import EmpiricalDistribution, from_samples
from .errors import LogcaveError


class InputError(LogcaveError):
    """Unreadable or malformed input file."""


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_table(path, header: str = "auto", min_cols: int = 1, max_cols: int | None = None):
    """Read a numeric CSV into a 2-d float array.

    ``header`` is ``"auto"`` (skip the first row if it is not numeric),
    ``"yes"`` or ``"no"``. Blank lines are ignored.
    """
    if header not in ("auto", "yes", "no"):
        raise ValueError("header must be 'auto', 'yes' or 'no'")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not UTF-8 text") from exc
    if rows and (header == "yes" or (header == "auto"
                                     and not all(_is_number(c) for c in rows[0]))):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path} contains no data rows")
    width = len(rows[0])
    if width < min_cols or (max_cols is not None and width > max_cols):
        raise InputError(f"{path}: expected between {min_cols} and {max_cols or 'any'} columns, "
                         f"found {width}")
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + 1} has {len(row)} columns, expected {width}")
        try:
            out[i] = [float(c) for c in row]
        except ValueError as exc:
            raise InputError(f"{path}: row {i + 1}: {exc}") from exc
    return out


def read_distribution(path, header: str = "auto", tie_tol: float = 0.0) -> EmpiricalDistribution:
    """``value[,weight]`` CSV as an empirical distribution."""
    t = read_table(path, header, 1, 2)
    return from_samples(t[:, 0], None if t.shape[1] == 1 else t[:, 1], tie_tol=tie_tol)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename."""
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(obj):
    # NaN and inf are not JSON; emit null instead
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    """Deterministic JSON. Floats use the shortest repr that round-trips."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    write_atomic(path, dumps(obj))


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, columns) -> None:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(format_float(v) for v in row))
    write_atomic(path, "\n".join(lines) + "\n")
