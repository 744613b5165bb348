"""
Services package for sgisim.
Contains service classes for field evaluation, propagation, fringe analysis and output.
"""

from .dynamics_service import DynamicsService
from .field_service import FieldService
from .fringe_service import FringeService
from .hd_service import HDService
from .landscapes import ChipLandscape, HarmonicLandscape, MagneticLandscape, PulseSchedule, UniformGradientLandscape
from .noise_service import NoiseService
from .output_service import OutputService, write_csv
from .phase_space_service import PhaseSpaceService
from .quantum_service import QuantumService
from .sequencer_service import SequencerService
from .wigner_service import GaussianPair, WignerService

__all__ = [
    "ChipLandscape",
    "DynamicsService",
    "FieldService",
    "FringeService",
    "GaussianPair",
    "HDService",
    "HarmonicLandscape",
    "MagneticLandscape",
    "NoiseService",
    "OutputService",
    "PhaseSpaceService",
    "PulseSchedule",
    "QuantumService",
    "SequencerService",
    "UniformGradientLandscape",
    "WignerService",
    "write_csv",
]
