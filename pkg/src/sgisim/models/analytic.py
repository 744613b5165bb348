"""Records for the closed-form half-loop phase-space model."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HalfLoopAnalytic:
    omega: float
    t_split: float
    t_delay: float
    t_stop: float
    kick_k: float
    sigma_z0: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if min(self.t_split, self.t_delay, self.t_stop) < 0:
            raise ValueError("Times must be non-negative")
        if self.kick_k < 0:
            raise ValueError(f"kick_k must be non-negative, got {self.kick_k}")


@dataclass(frozen=True)
class PhaseSpaceMatrix:
    """2×2 map acting on (position, momentum) column vectors."""

    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (2, 2):
            raise ValueError(f"Phase-space matrix must be 2x2, got {self.entries.shape}")

    def __matmul__(self, other: "PhaseSpaceMatrix") -> "PhaseSpaceMatrix":
        return PhaseSpaceMatrix(self.entries @ other.entries)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.entries))

    def apply(self, z: float, p: float) -> tuple:
        z_out, p_out = self.entries @ np.array([z, p])
        return float(z_out), float(p_out)


@dataclass(frozen=True)
class FarFieldFringes:
    wavelength: float
    envelope: float
    n_fringes: float
