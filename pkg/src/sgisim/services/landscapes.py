"""
Magnetic landscapes seen by the wavepacket centers.
Each landscape gives |B|, its gradient and its diagonal curvature at a
point and time; pulse schedules gate the gradient sources.
"""

import logging
from abc import ABC, abstractmethod
from typing import List, Sequence, Tuple

import numpy as np

from ..models.geometry import ChipGeometry, FieldModel
from .field_service import FieldService

logger = logging.getLogger(__name__)

LandscapeSample = Tuple[float, np.ndarray, np.ndarray]


class PulseSchedule:
    """Piecewise-constant gate factor for the gradient source."""

    def __init__(self, windows: Sequence[Tuple[float, float, float]] = ()):
        """
        Args:
            windows: (t_start, t_end, factor) triples; the factor is 0 outside them
        """
        self.windows: List[Tuple[float, float, float]] = sorted(windows)
        for start, end, _ in self.windows:
            if end < start:
                raise ValueError(f"Pulse window ends before it starts: ({start}, {end})")

    @classmethod
    def always(cls, factor: float = 1.0) -> "PulseSchedule":
        return cls([(-np.inf, np.inf, factor)])

    @classmethod
    def from_segments(cls, segments: Sequence[Tuple[str, float, float]], t0: float = 0.0) -> "PulseSchedule":
        """Build windows from consecutive (name, duration, factor) segments starting at t0."""
        windows = []
        t = t0
        for _, duration, factor in segments:
            if factor != 0 and duration > 0:
                windows.append((t, t + duration, factor))
            t += duration
        return cls(windows)

    def factor(self, t: float) -> float:
        for start, end, value in self.windows:
            if start <= t < end:
                return value
        return 0.0


class MagneticLandscape(ABC):
    """|B| field seen by the atoms, with the Zeeman reference removed by the RF frame."""

    reference_field: float = 0.0

    @abstractmethod
    def sample(self, position: np.ndarray, t: float) -> LandscapeSample:
        """Return (|B|, ∇|B|, diag ∂²|B|/∂x_j²) at a position and time."""

    def is_active(self, t: float) -> bool:
        return True


class ChipLandscape(MagneticLandscape):
    """Atom-chip field with the chip current gated by a schedule."""

    def __init__(
        self,
        geometry: ChipGeometry,
        model: FieldModel,
        schedule: PulseSchedule,
        field_service: FieldService = None,
    ):
        self.geometry = geometry
        self.model = model
        self.schedule = schedule
        self.field_service = field_service or FieldService()
        self.reference_field = abs(geometry.bias_y)

    def is_active(self, t: float) -> bool:
        return self.schedule.factor(t) != 0 and self.geometry.current != 0

    def sample(self, position: np.ndarray, t: float) -> LandscapeSample:
        factor = self.schedule.factor(t)
        if factor == 0 or self.geometry.current == 0:
            return self.reference_field, np.zeros(3), np.zeros(3)
        geometry = self.geometry.with_current(self.geometry.current * factor)
        return self.field_service.magnitude_derivatives(geometry, position, self.model)


class UniformGradientLandscape(MagneticLandscape):
    """|B| = B0 + s(t)·G·(z − z_ref): a spatially linear field along z."""

    def __init__(self, gradient: float, schedule: PulseSchedule, b0: float = 1e-4, z_ref: float = 0.0):
        self.gradient = gradient
        self.schedule = schedule
        self.b0 = b0
        self.z_ref = z_ref
        self.reference_field = b0

    def is_active(self, t: float) -> bool:
        return self.schedule.factor(t) != 0 and self.gradient != 0

    def sample(self, position: np.ndarray, t: float) -> LandscapeSample:
        slope = self.schedule.factor(t) * self.gradient
        z = float(np.asarray(position)[2])
        return self.b0 + slope * (z - self.z_ref), np.array([0.0, 0.0, slope]), np.zeros(3)


class HarmonicLandscape(MagneticLandscape):
    """|B| = B0 + s(t)·½·Σ c_j (x_j − x_c,j)², a quadratic well."""

    def __init__(self, curvature: Sequence[float], center: Sequence[float], schedule: PulseSchedule, b0: float = 1e-4):
        self.curvature = np.asarray(curvature, dtype=float).reshape(3)
        self.center = np.asarray(center, dtype=float).reshape(3)
        self.schedule = schedule
        self.b0 = b0
        self.reference_field = b0

    def is_active(self, t: float) -> bool:
        return self.schedule.factor(t) != 0 and bool(np.any(self.curvature))

    def sample(self, position: np.ndarray, t: float) -> LandscapeSample:
        factor = self.schedule.factor(t)
        offset = np.asarray(position, dtype=float) - self.center
        curvature = factor * self.curvature
        return self.b0 + 0.5 * float(curvature @ offset**2), curvature * offset, curvature
