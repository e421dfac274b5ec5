"""Canonical JSON writing for reports and manifests.

Output is byte-stable: keys sorted, floats written with 17 significant
digits (exact round trip), non-finite floats rejected.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

FLOAT_FORMAT = ".17g"


def format_float(value: float) -> str:
    """Format a float with 17 significant digits, keeping it a JSON float."""
    if not math.isfinite(value):
        raise ValueError(f"Cannot serialize non-finite float {value!r}")
    text = format(value, FLOAT_FORMAT)
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, Enum):
        return _encode(obj.value, indent, level)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return _encode_str(obj)
    if isinstance(obj, Path):
        return _encode_str(obj.as_posix())
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{_encode_str(str(key))}: {_encode(obj[key], indent, level + 1)}"
            for key in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + end_pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not seq:
            return "[]"
        # Numeric leaf lists stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end_pad + "]"
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def _encode_str(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def canonical_dumps(obj: Any, indent: int = 2) -> str:
    """Serialize ``obj`` to canonical JSON text (trailing newline included)."""
    return _encode(obj, indent, 0) + "\n"


def write_canonical(obj: Any, path: Path) -> Path:
    """Write ``obj`` as canonical UTF-8 JSON to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_dumps(obj), encoding="utf-8")
    return path
