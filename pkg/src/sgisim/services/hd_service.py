"""
Service for closed-form Humpty-Dumpty visibility laws and condensate sizing.
"""

import logging
from functools import cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import spherical_jn

from ..models.bec import BECParams
from ..models.constants import CONSTANTS, PhysicalConstants

logger = logging.getLogger(__name__)

# Gaussian-equivalent width of a TF profile, σ ≈ 0.41·z_max
TF_GAUSSIAN_WIDTH_FACTOR = 0.41
# Equal-curvature Gaussian surrogate of the TF momentum law at Δp = 0
TF_MOMENTUM_CURVATURE_FACTOR = 1.0 / np.sqrt(7.0)
SERIES_THRESHOLD = 1e-2
HALF_WIDTH_TO_SIGMA = np.sqrt(2.0 * np.log(2.0))


def _tf_momentum_law(xi):
    xi = np.abs(np.asarray(xi, dtype=float))
    small = xi < SERIES_THRESHOLD
    x2 = xi**2
    series = 1.0 - x2 / 14.0 + x2**2 / 504.0 - x2**3 / 33264.0
    safe = np.where(small, 1.0, xi)
    # (3 sin ξ − ξ² sin ξ − 3ξ cos ξ)/ξ³ is the spherical Bessel function j2(ξ)
    closed = 15.0 * spherical_jn(2, safe) / safe**2
    return np.where(small, series, closed)


def _tf_shell_overlap(t: float, s: float) -> float:
    """Transverse overlap of two unit TF profiles shifted by s, at axial offset t from the midpoint."""
    m = 1.0 - (abs(t) + 0.5 * s) ** 2
    if m <= 0:
        return 0.0
    b = abs(t) * s
    if b == 0:
        return 0.5 * m**2
    root = np.sqrt(m * (m + 2.0 * b))
    return 0.5 * ((m + b) * root - b**2 * np.log((m + b + root) / b))


def tf_position_overlap(s: float) -> float:
    """
    Exact overlap of two 3D Thomas-Fermi wavefunctions displaced by s·z_max along z.

    Normalized to 1 at s = 0 and zero for s ≥ 2.
    """
    s = abs(s)
    if s >= 2.0:
        return 0.0
    half_length = 1.0 - 0.5 * s
    integral, _ = quad(_tf_shell_overlap, 0.0, half_length, args=(s,), epsabs=1e-13, epsrel=1e-11)
    return float(15.0 / 8.0 * 2.0 * integral)


@cache
def tf_momentum_width_factor() -> float:
    """Gaussian width (in z_max) that meets the TF momentum law at half visibility."""
    xi_half = brentq(lambda xi: float(_tf_momentum_law(xi)) - 0.5, 1.0, 5.0, xtol=1e-14)
    return float(HALF_WIDTH_TO_SIGMA / xi_half)


@cache
def tf_position_width_factor() -> float:
    """
    σ_TF/z_max of the Gaussian position law.

    Solves tf_position_overlap(s) = 1/2 for the shift s, that is the 3D
    overlap of two displaced TF wavefunctions, and converts the half-width
    to a Gaussian σ. No Fourier transform of the momentum distribution is
    involved.
    """
    s_half = brentq(lambda s: tf_position_overlap(s) - 0.5, 0.2, 1.8, xtol=1e-12)
    factor = float(s_half / HALF_WIDTH_TO_SIGMA)
    logger.debug(f"Derived TF position width factor {factor:.6f}")
    return factor


class HDService:
    """Service class for recombination-precision visibility laws."""

    def __init__(self, constants: PhysicalConstants = CONSTANTS):
        self.constants = constants

    def hd_visibility_gaussian(self, sigma_z, delta_p, sigma_p, delta_z):
        """exp(−σ_z²Δp²/2ħ²)·exp(−σ_p²Δz²/2ħ²) for independent momentum and position mismatch."""
        if np.any(np.asarray(sigma_z) <= 0) or np.any(np.asarray(sigma_p) <= 0):
            raise ValueError("Widths must be positive")
        hbar = self.constants.hbar
        return np.exp(-((sigma_z * delta_p) ** 2) / (2.0 * hbar**2)) * np.exp(
            -((sigma_p * delta_z) ** 2) / (2.0 * hbar**2)
        )

    def hd_visibility_tf_momentum(self, z_max, delta_p):
        """
        Visibility of a Thomas-Fermi condensate after a momentum mismatch.

        V = (15/ξ⁵)(3 sin ξ − ξ² sin ξ − 3ξ cos ξ) with ξ = Δp·z_max/ħ,
        evaluated by its Taylor series for small ξ.
        """
        if np.any(np.asarray(z_max) <= 0):
            raise ValueError(f"z_max must be positive, got {z_max}")
        xi = np.asarray(delta_p) * np.asarray(z_max) / self.constants.hbar
        value = _tf_momentum_law(xi)
        return float(value) if value.ndim == 0 else value

    def hd_visibility_tf_momentum_gaussian(self, z_max, delta_p, width_factor: float = TF_GAUSSIAN_WIDTH_FACTOR):
        """
        Gaussian surrogate of the TF momentum law with σ = width_factor·z_max.

        The default is the Gaussian-equivalent width 0.41·z_max. Pass
        tf_momentum_width_factor() for the width that meets the exact law at
        half visibility.
        """
        if width_factor <= 0:
            raise ValueError(f"width_factor must be positive, got {width_factor}")
        sigma = width_factor * np.asarray(z_max)
        return np.exp(-((sigma * np.asarray(delta_p)) ** 2) / (2.0 * self.constants.hbar**2))

    def hd_visibility_tf_position(self, z_max, delta_z):
        """exp(−Δz²/2σ_TF²) with σ_TF derived from the exact TF position overlap."""
        if np.any(np.asarray(z_max) <= 0):
            raise ValueError(f"z_max must be positive, got {z_max}")
        sigma_tf = tf_position_width_factor() * np.asarray(z_max)
        return np.exp(-(np.asarray(delta_z) ** 2) / (2.0 * sigma_tf**2))

    def momentum_width_for_hd(self, sigma_z: float) -> float:
        """Momentum width ħ/2σ_z used as the normalization axis of HD reports."""
        if sigma_z <= 0:
            raise ValueError(f"sigma_z must be positive, got {sigma_z}")
        return self.constants.hbar / (2.0 * sigma_z)

    def bec_size(self, params: BECParams, scattering_length: float = None) -> BECParams:
        """
        Thomas-Fermi chemical potential and axial half-length of a trapped condensate.

        Args:
            params: Atom number and trap frequencies in rad/s
            scattering_length: s-wave scattering length in m, defaults to the Rb87 value

        Returns:
            BECParams with chem_potential and tf_halflength_z filled in
        """
        a = self.constants.a_scatter if scattering_length is None else scattering_length
        if a <= 0:
            raise ValueError(f"Scattering length must be positive, got {a}")

        hbar = self.constants.hbar
        mass = self.constants.mass_rb87
        omega_bar = float(np.prod(params.trap_freqs)) ** (1.0 / 3.0)
        mu = (
            15.0 * hbar**2 * np.sqrt(mass) / 2.0**2.5 * params.atom_count * omega_bar**3 * a
        ) ** 0.4
        w0 = np.sqrt(2.0 * mu / mass) / params.trap_freqs[2]

        logger.info(
            f"BEC of {params.atom_count} atoms: mu/h = {mu / (2 * np.pi * hbar):.1f} Hz, "
            f"w0 = {w0 * 1e6:.3f} um"
        )
        return BECParams(
            atom_count=params.atom_count,
            trap_freqs=params.trap_freqs,
            chem_potential=float(mu),
            tf_halflength_z=float(w0),
        )

    @staticmethod
    def tf_expansion(w0, omega, t):
        """TF half-length after release, w0·sqrt(1 + ω²t²)."""
        if np.any(np.asarray(w0) < 0) or np.any(np.asarray(t) < 0) or np.any(np.asarray(omega) < 0):
            raise ValueError("Inputs must be non-negative")
        return w0 * np.sqrt(1.0 + (np.asarray(omega) * np.asarray(t)) ** 2)
