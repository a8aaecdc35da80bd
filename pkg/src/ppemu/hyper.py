"""Fixed GP hyperparameter sets for 1-, 2-, and 3-parameter terms.

Ranges are in normalized-parameter units; multi-dimensional ranges are the
Euclidean norm of a per-axis scale, consistent with an isotropic kernel on
the unit cube.  The built-in presets keep every range at or above ~30% of
the diagonal of its cube, so the fitted terms capture non-local,
low-frequency structure rather than sample noise.
"""

import math
from dataclasses import dataclass

from .errors import InputError


@dataclass(frozen=True)
class HyperparameterSet:
    name: str
    range_1d: float
    range_2d: float
    range_3d: float
    nugget_ratio: float

    def __post_init__(self):
        for label in ("range_1d", "range_2d", "range_3d", "nugget_ratio"):
            value = getattr(self, label)
            if not (value > 0.0 and math.isfinite(value)):
                raise InputError(f"{label} must be positive, got {value}")

    def range_for(self, d: int) -> float:
        """Length scale for a d-parameter term."""
        if d == 1:
            return self.range_1d
        if d == 2:
            return self.range_2d
        if d == 3:
            return self.range_3d
        raise InputError(f"no preset range for {d}-parameter terms")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "range_1d": self.range_1d,
            "range_2d": self.range_2d,
            "range_3d": self.range_3d,
            "nugget_ratio": self.nugget_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperparameterSet":
        return cls(
            name=str(d["name"]),
            range_1d=float(d["range_1d"]),
            range_2d=float(d["range_2d"]),
            range_3d=float(d["range_3d"]),
            nugget_ratio=float(d["nugget_ratio"]),
        )


def _norm2(s: float) -> float:
    return math.sqrt(2.0) * s


def _norm3(s: float) -> float:
    return math.sqrt(3.0) * s


PRESETS = {
    "default": HyperparameterSet("default", 0.60, _norm2(0.5), _norm3(0.4), 2.00),
    "set1": HyperparameterSet("set1", 0.60, _norm2(0.5), _norm3(0.4), 4.00),
    "set2": HyperparameterSet("set2", 0.60, _norm2(0.5), _norm3(0.4), 1.00),
    "set3": HyperparameterSet("set3", 0.80, _norm2(0.6), _norm3(0.4), 2.00),
    "set4": HyperparameterSet("set4", 1.00, _norm2(0.8), _norm3(0.6), 2.00),
    "set5": HyperparameterSet("set5", 0.50, _norm2(0.4), _norm3(0.3), 2.00),
}

SWEEP_PRESETS = ("default", "set1", "set2", "set3", "set4", "set5")


def get_preset(name: str) -> HyperparameterSet:
    try:
        return PRESETS[name]
    except KeyError:
        raise InputError(
            f"unknown hyperparameter preset {name!r}; known: {sorted(PRESETS)}"
        ) from None
