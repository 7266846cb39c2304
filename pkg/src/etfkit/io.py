"""Matrix JSON files: ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` (row-major).

Floats are written with ``repr`` precision, which round-trips doubles exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "MatrixFileError",
    "MalformedMatrixFile",
    "DimensionMismatch",
    "NonFiniteValue",
    "matrix_to_json",
    "matrix_from_json",
    "serialize_matrix_file",
    "parse_matrix_file",
]


class MatrixFileError(ValueError):
    pass


class MalformedMatrixFile(MatrixFileError):
    pass


class DimensionMismatch(MatrixFileError):
    pass


class NonFiniteValue(MatrixFileError):
    pass


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteValue("matrix contains non-finite entries")
    flat = m.ravel()
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def _reject_constant(name: str):
    raise NonFiniteValue(f"non-finite value {name} in matrix file")


def matrix_from_json(obj: dict) -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= obj.keys():
        raise MalformedMatrixFile("expected an object with keys rows, cols, data")
    rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 0 or cols < 0:
        raise MalformedMatrixFile("rows and cols must be non-negative integers")
    if not isinstance(data, list):
        raise MalformedMatrixFile("data must be a list of [re, im] pairs")
    if len(data) != rows * cols:
        raise DimensionMismatch(
            f"rows*cols = {rows * cols} but data holds {len(data)} entries"
        )
    out = np.empty(rows * cols, dtype=complex)
    for i, pair in enumerate(data):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise MalformedMatrixFile(f"entry {i} is not an [re, im] pair")
        re, im = pair
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (re, im)):
            raise MalformedMatrixFile(f"entry {i} has non-numeric parts")
        if not (math.isfinite(re) and math.isfinite(im)):
            raise NonFiniteValue(f"entry {i} is not finite")
        out[i] = complex(re, im)
    return out.reshape(rows, cols)


def serialize_matrix_file(m: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(matrix_to_json(m)) + "\n")
    return path


def parse_matrix_file(path: str | Path) -> np.ndarray:
    text = Path(path).read_text()
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedMatrixFile(f"{path}: invalid JSON ({exc.msg})") from exc
    return matrix_from_json(obj)
