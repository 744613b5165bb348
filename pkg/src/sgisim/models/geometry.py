"""Atom-chip geometry and field sample records."""

from dataclasses import dataclass, replace
from enum import Enum, auto

import numpy as np
from dataclasses_json import dataclass_json


class FieldModel(Enum):
    ThinWire = auto()
    FiniteWire = auto()

    def __str__(self):
        return self.name

    @classmethod
    def from_name(cls, name: str) -> "FieldModel":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"Unknown field model '{name}', expected one of {[m.name for m in cls]}")


@dataclass_json
@dataclass(frozen=True)
class ChipGeometry:
    """Three parallel chip wires forming a quadrupole with a homogeneous bias.

    Lengths in m, current in A, bias in T. Wires run along x. The center wire
    carries the current along -x and the two outer wires along +x, which makes
    |B| convex below the quadrupole center for a bias along +y.
    """

    wire_spacing: float = 1.0e-4
    wire_width: float = 4.0e-5
    wire_thickness: float = 2.0e-6
    wire_length: float = 1.0e-2
    current: float = 1.0
    bias_y: float = 36.7e-4

    def __post_init__(self):
        if not self.wire_spacing > self.wire_width > 0:
            raise ValueError(
                f"Geometry requires wire_spacing > wire_width > 0, "
                f"got spacing={self.wire_spacing}, width={self.wire_width}"
            )
        if self.wire_thickness <= 0 or self.wire_length <= 0:
            raise ValueError("wire_thickness and wire_length must be positive")

    def with_current(self, current: float) -> "ChipGeometry":
        return replace(self, current=current)

    @property
    def wire_offsets(self) -> np.ndarray:
        """Lateral (y) positions of the three wires."""
        return np.array([-self.wire_spacing, 0.0, self.wire_spacing])

    @property
    def wire_signs(self) -> np.ndarray:
        return np.array([1.0, -1.0, 1.0])


@dataclass(frozen=True)
class FieldSample:
    b_vector: np.ndarray
    b_magnitude: float
    gradient_z: float
    curvature_z: float
