"""Unit conversion helpers for the configuration boundary.

Internal computations use SI units. Configuration files and CSV columns carry
explicit suffixes (_um, _us, _mA, _G, _Hz, _nm) and are converted here.
"""

import math

UM = 1e-6
NM = 1e-9
US = 1e-6
MS = 1e-3
MM = 1e-3
MA = 1e-3
GAUSS = 1e-4


def um(value: float) -> float:
    return value * UM


def nm(value: float) -> float:
    return value * NM


def us(value: float) -> float:
    return value * US


def ms(value: float) -> float:
    return value * MS


def mm(value: float) -> float:
    return value * MM


def milliamp(value: float) -> float:
    return value * MA


def gauss(value: float) -> float:
    return value * GAUSS


def hz_to_rad(frequency: float) -> float:
    """Convert a frequency in Hz to an angular frequency in rad/s."""
    return 2.0 * math.pi * frequency


def to_um(value: float) -> float:
    return value / UM


def to_us(value: float) -> float:
    return value / US


def kappa_si(kappa_per_um_us: float) -> float:
    """Convert a kick rate given in (μm·μs)⁻¹ to 1/(m·s)."""
    return kappa_per_um_us / (UM * US)
