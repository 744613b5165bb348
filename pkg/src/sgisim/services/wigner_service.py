"""
Service for Wigner densities of two-Gaussian superpositions.
A plotting convenience: the density is evaluated in closed form on a
(z, k) grid and exported as a long-format CSV.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from ..utils import units
from ..utils.config import WignerConfig
from ..utils.errors import GridTooLargeError
from .output_service import write_csv

logger = logging.getLogger(__name__)

MAX_CELLS = 4_000_000
WIGNER_COLUMNS = ("z_um", "k_per_um", "wigner")


@dataclass(frozen=True)
class GaussianPair:
    """Two equal-width Gaussians at centers z_a, z_b with wavevectors k_a, k_b (SI units)."""

    z_a: float
    z_b: float
    k_a: float
    k_b: float
    sigma: float
    relative_phase: float = 0.0
    weight_b: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.weight_b < 0:
            raise ValueError(f"weight_b must be non-negative, got {self.weight_b}")

    @classmethod
    def from_config(cls, settings: WignerConfig) -> "GaussianPair":
        return cls(
            z_a=units.um(settings.center_a_um),
            z_b=units.um(settings.center_b_um),
            k_a=settings.momentum_a_hbar_per_um / units.UM,
            k_b=settings.momentum_b_hbar_per_um / units.UM,
            sigma=units.um(settings.sigma_um),
        )

    @property
    def overlap(self) -> complex:
        """⟨ψa|ψb⟩ of the two normalized components."""
        d = self.z_b - self.z_a
        dk = self.k_b - self.k_a
        z_mid = 0.5 * (self.z_a + self.z_b)
        return complex(np.exp(-(d**2) / (8.0 * self.sigma**2) - 0.5 * self.sigma**2 * dk**2 + 1j * dk * z_mid))

    @property
    def norm_squared(self) -> float:
        """Squared norm of ψa + w·e^{iφ}ψb before normalization."""
        cross = self.weight_b * (np.exp(1j * self.relative_phase) * self.overlap).real
        return float(1.0 + self.weight_b**2 + 2.0 * cross)


class WignerService:
    """Service class for closed-form Wigner densities."""

    @staticmethod
    def _component(z: np.ndarray, k: np.ndarray, center: float, wavevector: float, sigma: float) -> np.ndarray:
        return np.exp(-((z - center) ** 2) / (2.0 * sigma**2) - 2.0 * sigma**2 * (k - wavevector) ** 2) / np.pi

    def wigner(self, pair: GaussianPair, z: np.ndarray, k: np.ndarray) -> np.ndarray:
        """
        Wigner density W(z, k) of (ψa + w·e^{iφ}ψb)/norm.

        Args:
            pair: Superposition parameters
            z: Positions in m
            k: Wavevectors in 1/m

        Returns:
            Dimensionless array of shape (len(z), len(k)) integrating to 1 over dz dk

        Raises:
            GridTooLargeError: If the grid exceeds 4e6 cells
        """
        z = np.asarray(z, dtype=float)
        k = np.asarray(k, dtype=float)
        cells = z.size * k.size
        if cells > MAX_CELLS:
            logger.error(f"Wigner grid of {cells} cells exceeds {MAX_CELLS}")
            raise GridTooLargeError(f"Wigner grid has {cells} cells, limit is {MAX_CELLS}")

        zz, kk = np.meshgrid(z, k, indexing="ij")
        sigma = pair.sigma
        density = self._component(zz, kk, pair.z_a, pair.k_a, sigma)
        density = density + pair.weight_b**2 * self._component(zz, kk, pair.z_b, pair.k_b, sigma)

        if pair.weight_b > 0:
            d = pair.z_b - pair.z_a
            z_mid = 0.5 * (pair.z_a + pair.z_b)
            k_mid = 0.5 * (pair.k_a + pair.k_b)
            envelope = self._component(zz, kk, z_mid, k_mid, sigma)
            fringe = np.cos((pair.k_b - pair.k_a) * zz + (k_mid - kk) * d + pair.relative_phase)
            density = density + 2.0 * pair.weight_b * envelope * fringe
        return density / pair.norm_squared

    @staticmethod
    def wavefunction(pair: GaussianPair, z: np.ndarray) -> np.ndarray:
        """Normalized ψ(z) of the superposition."""
        z = np.asarray(z, dtype=float)
        prefactor = (2.0 * np.pi * pair.sigma**2) ** -0.25

        def component(center, wavevector):
            return prefactor * np.exp(-((z - center) ** 2) / (4.0 * pair.sigma**2) + 1j * wavevector * z)

        psi = component(pair.z_a, pair.k_a) + pair.weight_b * np.exp(1j * pair.relative_phase) * component(
            pair.z_b, pair.k_b
        )
        return psi / np.sqrt(pair.norm_squared)

    @staticmethod
    def grid_from_config(settings: WignerConfig) -> Tuple[np.ndarray, np.ndarray]:
        if settings.z_points < 2 or settings.k_points < 2:
            raise ValueError("Wigner grid needs at least 2 points per axis")
        if settings.z_max_um <= settings.z_min_um or settings.k_max_per_um <= 0:
            raise ValueError("Wigner grid ranges must be non-empty")
        z = np.linspace(units.um(settings.z_min_um), units.um(settings.z_max_um), settings.z_points)
        k = np.linspace(-settings.k_max_per_um, settings.k_max_per_um, settings.k_points) / units.UM
        return z, k

    def export_csv(self, settings: WignerConfig, path: Path, **metadata) -> Path:
        """Evaluate the configured superposition and write one row per grid cell."""
        pair = GaussianPair.from_config(settings)
        z, k = self.grid_from_config(settings)
        density = self.wigner(pair, z, k)

        rows = (
            (units.to_um(z[i]), k[j] * units.UM, density[i, j])
            for i in range(z.size)
            for j in range(k.size)
        )
        logger.info(f"Writing Wigner density on {z.size}x{k.size} grid to {path}")
        return write_csv(path, WIGNER_COLUMNS, rows, metadata)
