"""Canonical JSON: sorted keys, shortest round-trip floats, stable bytes."""

from __future__ import annotations

import json

import numpy as np


def to_builtin(obj):
    """Recursively convert numpy containers/scalars to plain Python values."""
    if isinstance(obj, np.ndarray):
        return [to_builtin(v) for v in obj.tolist()] if obj.ndim else obj.item()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    return obj


def canonical_dumps(obj) -> str:
    """Deterministic JSON text; equal inputs always yield equal bytes.

    Python's float repr is the shortest string that round-trips, so numeric
    payloads stay exact across save/load cycles.
    """
    return json.dumps(to_builtin(obj), sort_keys=True, separators=(",", ":"))
