"""Uniform spatial grids and wavefunctions for the quantum solver."""

from dataclasses import dataclass

import numpy as np

from ..utils.errors import GridMismatchError


@dataclass(frozen=True)
class Grid1D:
    z_min: float
    dz: float = 5e-9
    n_points: int = 3000

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError(f"Grid needs at least 16 points, got {self.n_points}")
        if self.dz <= 0:
            raise ValueError(f"Grid spacing must be positive, got {self.dz}")

    @classmethod
    def centered(cls, center: float, dz: float = 5e-9, n_points: int = 3000) -> "Grid1D":
        return cls(z_min=center - 0.5 * dz * (n_points - 1), dz=dz, n_points=n_points)

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n_points)

    @property
    def z_max(self) -> float:
        return self.z_min + self.dz * (self.n_points - 1)

    @property
    def center(self) -> float:
        return self.z_min + 0.5 * self.dz * (self.n_points - 1)

    @property
    def span(self) -> float:
        return self.dz * (self.n_points - 1)

    def matches(self, other: "Grid1D", rtol: float = 1e-9) -> bool:
        return (
            self.n_points == other.n_points
            and abs(self.dz - other.dz) <= rtol * self.dz
            and abs(self.z_min - other.z_min) <= rtol * max(self.dz, abs(self.z_min))
        )

    def require_match(self, other: "Grid1D") -> None:
        if not self.matches(other):
            raise GridMismatchError(f"Grid mismatch: {self} vs {other}")

    def covers(self, center: float, sigma: float, margin: float = 5.0) -> bool:
        """Whether [center ± margin·sigma] lies inside the grid."""
        return self.z_min <= center - margin * sigma and center + margin * sigma <= self.z_max


@dataclass
class WaveFunction:
    grid: Grid1D
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"Amplitude length {self.amplitudes.shape} does not match grid of {self.grid.n_points} points"
            )

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.dz)

    def mean_position(self) -> float:
        return float(np.sum(self.grid.z * self.density) * self.grid.dz / self.norm())

    def width(self) -> float:
        """Standard deviation of the position density."""
        mean = self.mean_position()
        variance = np.sum((self.grid.z - mean) ** 2 * self.density) * self.grid.dz / self.norm()
        return float(np.sqrt(variance))

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes.copy())
