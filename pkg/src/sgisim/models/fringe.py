"""Fringe patterns, visibility estimates and fit result records."""

from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Dict, List, Optional

import numpy as np
from dataclasses_json import dataclass_json

from .wavefunction import Grid1D


class VisibilityMethod(Enum):
    Fit = auto()
    Fft = auto()
    Analytic = auto()
    Overlap = auto()

    def __str__(self):
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "VisibilityMethod":
        for method in cls:
            if method.name.lower() == name.lower():
                return method
        raise ValueError(f"Unknown visibility method '{name}'")


@dataclass
class FringePattern:
    grid: Grid1D
    density: np.ndarray
    time: float = 0.0
    shot_index: Optional[int] = None

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if self.density.shape != (self.grid.n_points,):
            raise ValueError(
                f"Density length {self.density.shape} does not match grid of {self.grid.n_points} points"
            )

    @property
    def z(self) -> np.ndarray:
        return self.grid.z


@dataclass_json
@dataclass(frozen=True)
class VisibilityEstimate:
    value: float
    uncertainty: float
    method: str
    sample_size: int = 1
    flagged: bool = False


@dataclass_json
@dataclass
class FringeFit:
    amplitude: float
    center: float
    width: float
    visibility: float
    visibility_raw: float
    period: float
    phase: float
    offset: float
    z_ref: float
    chirp: Optional[float] = None
    errors: Dict[str, float] = field(default_factory=dict)
    r_squared: float = 0.0

    @property
    def wavevector(self) -> float:
        return 2.0 * np.pi / self.period


@dataclass_json
@dataclass(frozen=True)
class RamseyFit:
    contrast: float
    phi0: float
    offset: float
    contrast_error: float
    phi0_error: float
    offset_error: float
    normalized_contrast: Optional[float] = None
    normalized_error: Optional[float] = None


@dataclass_json
@dataclass(frozen=True)
class DecayFit:
    coefficients: List[float]
    r_squared: float
    n_points: int


@dataclass_json
@dataclass(frozen=True)
class EnvelopeSineFit:
    offset: float
    amplitude: float
    t_peak: float
    width: float
    frequency: float
    phase: float
    r_squared: float
    errors: Dict[str, float] = field(default_factory=dict)


@dataclass_json
@dataclass(frozen=True)
class SqrtQuadraticFit:
    a: float
    b: float
    negative_offset: bool = False


@dataclass
class EnsembleResult:
    """Averaged random-vector ensemble at one split duration."""

    pattern: FringePattern
    multishot: VisibilityEstimate
    single_shot: List[float]
    normalized: VisibilityEstimate
    epsilon: float
    correlation: str
    t_split: float
    seed: int

    @property
    def single_shot_mean(self) -> float:
        return float(np.mean(self.single_shot))
