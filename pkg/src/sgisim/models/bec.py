"""Bose-Einstein condensate sizing parameters."""

from dataclasses import dataclass
from typing import Optional, Tuple

from dataclasses_json import dataclass_json


@dataclass_json
@dataclass(frozen=True)
class BECParams:
    atom_count: int
    trap_freqs: Tuple[float, float, float]
    chem_potential: Optional[float] = None
    tf_halflength_z: Optional[float] = None

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError(f"atom_count must be at least 1, got {self.atom_count}")
        if len(self.trap_freqs) != 3 or min(self.trap_freqs) <= 0:
            raise ValueError(f"trap_freqs must be three positive values, got {self.trap_freqs}")
        if self.tf_halflength_z is not None and self.tf_halflength_z <= 0:
            raise ValueError("tf_halflength_z must be positive once computed")
