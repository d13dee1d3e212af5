"""File formats: complex matrices and vectors as JSON, reports, atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ValidationError


def matrix_to_json(M) -> dict:
    """``{"rows", "cols", "data": [[re, im], ...]}`` in row-major order."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise ValidationError("expected a 2-d array")
    flat = M.reshape(-1)
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": [[float(z.real), float(z.imag)] for z in flat]}


def _complex_entries(data, what: str) -> np.ndarray:
    try:
        out = []
        for z in data:
            if isinstance(z, (list, tuple)):
                if len(z) != 2:
                    raise ValueError
                out.append(complex(float(z[0]), float(z[1])))
            else:
                out.append(complex(float(z), 0.0))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: entries must be reals or [re, im] pairs") from exc
    arr = np.array(out, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: non-finite entry")
    return arr


def matrix_from_json(obj, what: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= set(obj):
        raise ValidationError(f"{what}: expected an object with rows, cols and data")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: rows and cols must be integers") from exc
    arr = _complex_entries(obj["data"], what)
    if rows < 1 or cols < 1 or arr.shape[0] != rows * cols:
        raise ValidationError(f"{what}: expected {rows}x{cols} entries, got {arr.shape[0]}")
    return arr.reshape(rows, cols)


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128).reshape(-1)]


def vector_from_json(obj, what: str = "vector") -> np.ndarray:
    if not isinstance(obj, (list, tuple)) or not obj:
        raise ValidationError(f"{what}: expected a non-empty list")
    return _complex_entries(obj, what)


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def load_matrix(path: Path) -> np.ndarray:
    return matrix_from_json(read_json(path), str(path))


def save_matrix(path: Path, M) -> None:
    atomic_write(path, dumps(matrix_to_json(M)))


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and enums for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return matrix_to_json(obj) if obj.ndim == 2 else vector_to_json(obj)
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def config_hash(config: dict) -> str:
    blob = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
