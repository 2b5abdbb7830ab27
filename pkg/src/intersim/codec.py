"""Canonical JSON-ready encoding of simulator values.

Sets are emitted sorted by their encoded form so equal values always encode
to identical text.
"""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from typing import Any


def encode(value: Any) -> Any:
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (frozenset, set)):
        items = [encode(v) for v in value]
        return sorted(items, key=dumps)
    if isinstance(value, tuple) and hasattr(value, "_fields"):
        return [encode(v) for v in value]
    if isinstance(value, (tuple, list)):
        return [encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    raise TypeError(f"cannot encode {type(value).__name__}")


def dumps(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def canonical(value: Any) -> str:
    return dumps(encode(value))


def digest(value: Any) -> str:
    return hashlib.sha256(canonical(value).encode()).hexdigest()[:16]
