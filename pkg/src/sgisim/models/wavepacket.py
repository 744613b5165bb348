"""Semiclassical wavepacket state and overlap inputs."""

from dataclasses import dataclass, field, replace
from enum import Enum, auto
from typing import Optional, Tuple

import numpy as np


class ScaleMode(Enum):
    ThomasFermi = auto()
    Gaussian = auto()

    def __str__(self):
        return self.name


def _vec3(value) -> np.ndarray:
    array = np.asarray(value, dtype=float).reshape(3)
    return array.copy()


@dataclass
class WavepacketState:
    """Center, scale factors and action phase of one spin branch.

    sigma0 holds the Gaussian-equivalent initial widths that scale with
    lambda; trap_omega0 holds the in-trap frequencies driving the
    Thomas-Fermi scaling equations.
    """

    position: np.ndarray
    momentum: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    scale_rate: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phase: float = 0.0
    spin_mF: int = 2
    sigma0: np.ndarray = field(default_factory=lambda: np.full(3, 1.2e-6))
    trap_omega0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.position = _vec3(self.position)
        self.momentum = _vec3(self.momentum)
        self.scale = _vec3(self.scale)
        self.scale_rate = _vec3(self.scale_rate)
        self.sigma0 = _vec3(self.sigma0)
        if self.trap_omega0 is not None:
            self.trap_omega0 = _vec3(self.trap_omega0)
        if np.any(self.scale <= 0):
            raise ValueError(f"Scale factors must be positive, got {self.scale}")
        if not np.isfinite(self.phase):
            raise ValueError("Phase must be finite")

    def copy(self, **changes) -> "WavepacketState":
        fresh = replace(
            self,
            position=self.position.copy(),
            momentum=self.momentum.copy(),
            scale=self.scale.copy(),
            scale_rate=self.scale_rate.copy(),
            sigma0=self.sigma0.copy(),
            trap_omega0=None if self.trap_omega0 is None else self.trap_omega0.copy(),
        )
        for name, value in changes.items():
            setattr(fresh, name, value)
        return fresh

    @property
    def width(self) -> np.ndarray:
        return self.sigma0 * self.scale


@dataclass(frozen=True)
class OverlapInputs:
    delta_p: float
    delta_z: float
    sigma: float
    chirp_xi: float = 0.0
    scales: Tuple[float, float] = (1.0, 1.0)
    rates: Tuple[float, float] = (0.0, 0.0)
    sigma_z: Optional[float] = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if min(self.scales) <= 0:
            raise ValueError(f"Scale factors must be positive, got {self.scales}")
        if self.sigma_z is not None and self.sigma_z <= 0:
            raise ValueError(f"sigma_z must be positive, got {self.sigma_z}")


TRAJECTORY_COLUMNS = ("t_us", "z1_um", "z2_um", "p1_hbar_per_um", "p2_hbar_per_um", "lambda_z1", "lambda_z2", "phase_diff_rad")


@dataclass
class FullLoopOutcome:
    """Both branches after a full-loop sequence and their overlap.

    Trajectory rows are in SI units (t, z1, z2, p1, p2, λz1, λz2, Δφ).
    """

    branch_a: WavepacketState
    branch_b: WavepacketState
    delta_z: float
    delta_p: float
    max_separation: float
    max_momentum_difference: float
    phase_difference: float
    visibility: float
    trajectory: Optional[np.ndarray] = None

    def population(self, analysis_phase: float = 0.0) -> float:
        """Spin population ½(1 + V cos(Δφ + φa)) at an analysis phase."""
        return 0.5 * (1.0 + self.visibility * np.cos(self.phase_difference + analysis_phase))
