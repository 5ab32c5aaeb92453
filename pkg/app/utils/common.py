"""Shared helpers for number formatting, JSON conversion and checksums."""

import hashlib
import json
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np

SIGNIFICANT_DIGITS = 12


def sig(value: float) -> str:
    """Format a float with 12 significant digits; -0 prints as 0."""
    v = float(value)
    if v == 0.0:
        v = 0.0
    return f"{v:.{SIGNIFICANT_DIGITS}g}"


def jsonable(obj: Any) -> Any:
    """Convert numpy, complex, Fraction and dataclass values to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(sig(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(sig(obj.real)), "im": float(sig(obj.imag))}
    if isinstance(obj, Fraction):
        return str(obj)
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    return obj


def canonical_json(payload: Any) -> str:
    """Sorted, indented JSON with a trailing newline; stable across runs."""
    return json.dumps(jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
