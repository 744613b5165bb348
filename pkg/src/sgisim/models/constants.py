"""Physical constants for ⁸⁷Rb in the F=2 manifold."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34
    mass_rb87: float = 1.443160648e-25
    mu_bohr: float = 9.2740100783e-24
    mu0: float = 1.25663706212e-6
    g_gravity: float = 9.80665
    lande_gF: float = 0.5
    a_scatter: float = 5.18e-9

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ValueError(f"Physical constant {name} must be positive, got {value}")
        if self.lande_gF != 0.5:
            raise ValueError(f"lande_gF must be 0.5 for F=2, got {self.lande_gF}")


CONSTANTS = PhysicalConstants()
