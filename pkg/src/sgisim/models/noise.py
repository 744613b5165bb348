"""Noise descriptions for the analytic and random-vector models."""

from dataclasses import dataclass
from enum import Enum, auto

import numpy as np


class Correlation(Enum):
    Zero = auto()
    Infinite = auto()

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FluctuationSpec:
    phase_rms: float = 0.0
    k_rms: float = 0.0
    pos_rms: float = 0.0
    rel_current_rms: float = 0.0
    kappa: float = 0.0
    z_offset: float = 0.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"FluctuationSpec.{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class NoiseRealization:
    epsilon: float
    correlation: Correlation
    seed: int
    values: np.ndarray

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.values.size and np.max(np.abs(self.values)) > 1.0:
            raise ValueError("Noise values must lie in [-1, 1]")
