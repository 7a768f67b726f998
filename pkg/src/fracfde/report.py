"""Structured pass/fail records shared by the verification checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class PropertyReport:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    paper_ref: str = ""
    notes: str = ""
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "measured": _plain(self.measured),
            "tolerance": _plain(self.tolerance),
            "paper_ref": self.paper_ref,
            "notes": self.notes,
            "seed": self.seed,
        }


def _plain(obj):
    """Convert numpy scalars/arrays to JSON-safe Python values (non-finite -> string)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj
