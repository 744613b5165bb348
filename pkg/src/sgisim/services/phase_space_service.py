"""
Service for the closed-form half-loop phase-space model.
Rotation matrices, stopping condition, squeezing, separation and far-field fringes.
"""

import logging
from typing import Dict, Tuple

import numpy as np

from ..models.analytic import FarFieldFringes, HalfLoopAnalytic, PhaseSpaceMatrix
from ..models.constants import CONSTANTS, PhysicalConstants

logger = logging.getLogger(__name__)

FAR_FIELD_MARGIN = 10.0


class PhaseSpaceService:
    """Service class for (z, p) phase-space propagation in harmonic and free segments."""

    def __init__(self, constants: PhysicalConstants = CONSTANTS):
        self.constants = constants

    @property
    def mass(self) -> float:
        return self.constants.mass_rb87

    def rotation(self, omega: float, t: float) -> PhaseSpaceMatrix:
        """
        Phase-space map of a harmonic segment with frequency omega.

        omega = 0 gives free propagation, the shear [[1, t/m], [0, 1]].
        """
        if t < 0:
            raise ValueError(f"Duration must be non-negative, got {t}")
        if omega < 0:
            raise ValueError(f"omega must be non-negative, got {omega}")
        if omega == 0:
            return PhaseSpaceMatrix(np.array([[1.0, t / self.mass], [0.0, 1.0]]))

        c, s = np.cos(omega * t), np.sin(omega * t)
        m_omega = self.mass * omega
        return PhaseSpaceMatrix(np.array([[c, s / m_omega], [-m_omega * s, c]]))

    def composite_map(self, omega: float, t_delay: float, t_stop: float) -> PhaseSpaceMatrix:
        """Delay, stop and delay: R(0,Td)·R(ω,T2)·R(0,Td)."""
        delay = self.rotation(0.0, t_delay)
        return delay @ self.rotation(omega, t_stop) @ delay

    def far_field_map(
        self, omega: float, t_delay: float, t_stop: float, t_flight: float
    ) -> PhaseSpaceMatrix:
        """Map from the end of the splitting pulse to the image: R(0,TOF)·R(ω,T2)·R(0,Td)."""
        return (
            self.rotation(0.0, t_flight)
            @ self.rotation(omega, t_stop)
            @ self.rotation(0.0, t_delay)
        )

    @staticmethod
    def apply(matrix: PhaseSpaceMatrix, z: float, p: float) -> Tuple[float, float]:
        return matrix.apply(z, p)

    @staticmethod
    def optimal_stop_time(omega: float, t_delay: float) -> float:
        """Smallest positive T2 with ω·Td·tan(ω·T2) = 1, i.e. acot(ω·Td)/ω."""
        if omega <= 0:
            raise ValueError(f"omega must be positive, got {omega}")
        return float(np.arctan2(1.0, omega * t_delay) / omega)

    @staticmethod
    def squeeze_factor(omega: float, t_delay: float) -> float:
        if omega < 0:
            raise ValueError(f"omega must be non-negative, got {omega}")
        return float(np.sqrt(1.0 + (omega * t_delay) ** 2))

    def separation_after_stop(self, params: HalfLoopAnalytic) -> float:
        """Packet separation d = ξ·ħ·k/(m·ω) once the relative motion is stopped."""
        xi = self.squeeze_factor(params.omega, params.t_delay)
        return xi * self.constants.hbar * params.kick_k / (self.mass * params.omega)

    def focus_width(self, params: HalfLoopAnalytic) -> float:
        """Minimal width σ_min = ξ·ħ/(m·ω·σ_z0)."""
        if params.sigma_z0 <= 0:
            raise ValueError(f"sigma_z0 must be positive, got {params.sigma_z0}")
        xi = self.squeeze_factor(params.omega, params.t_delay)
        return xi * self.constants.hbar / (self.mass * params.omega * params.sigma_z0)

    def farfield_fringes(
        self, d: float, t: float, sigma_min: float, sigma_z0: float, kick_k: float
    ) -> FarFieldFringes:
        """
        Fringe period, envelope width and fringe count after a time of flight.

        Args:
            d: Packet separation in m
            t: Time of flight in s
            sigma_min: Focus width in m
            sigma_z0: Initial Gaussian width in m
            kick_k: Differential wavevector in 1/m

        Returns:
            FarFieldFringes record

        Raises:
            ValueError: If d or t is not positive
        """
        if d <= 0 or t <= 0:
            raise ValueError(f"Separation and time of flight must be positive, got d={d}, t={t}")

        hbar = self.constants.hbar
        threshold = self.mass * sigma_min**2 / hbar
        if t < FAR_FIELD_MARGIN * threshold:
            logger.warning(
                f"Time of flight {t * 1e3:.3f} ms is below {FAR_FIELD_MARGIN:.0f}x the "
                f"far-field time {threshold * 1e3:.3f} ms"
            )

        return FarFieldFringes(
            wavelength=2.0 * np.pi * hbar * t / (self.mass * d),
            envelope=hbar * t / (self.mass * sigma_min),
            n_fringes=kick_k * sigma_z0 / np.pi,
        )

    @staticmethod
    def phase_sensitivity(wavelength: float) -> float:
        """Fringe phase per unit displacement, 2π/λ in rad/m."""
        if wavelength <= 0:
            raise ValueError(f"Wavelength must be positive, got {wavelength}")
        return 2.0 * np.pi / wavelength

    def table_s1_row(self, params: HalfLoopAnalytic, t_flight: float) -> Dict[str, float]:
        """Closed-form half-loop figures for one scenario, in SI units."""
        d = self.separation_after_stop(params)
        sigma_min = self.focus_width(params)
        row = {
            "xi": self.squeeze_factor(params.omega, params.t_delay),
            "d": d,
            "sigma_min": sigma_min,
            "optimal_T2": self.optimal_stop_time(params.omega, params.t_delay),
        }
        if d > 0 and t_flight > 0:
            fringes = self.farfield_fringes(d, t_flight, sigma_min, params.sigma_z0, params.kick_k)
            row.update(
                wavelength=fringes.wavelength,
                envelope=fringes.envelope,
                n_fringes=fringes.n_fringes,
            )
        return row
