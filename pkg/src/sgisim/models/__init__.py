"""
Models package for sgisim.
Contains data models for chip geometry, wavepackets, sequences and fringe records.
"""

from .analytic import FarFieldFringes, HalfLoopAnalytic, PhaseSpaceMatrix
from .bec import BECParams
from .constants import CONSTANTS, PhysicalConstants
from .fringe import (
    DecayFit,
    EnvelopeSineFit,
    FringeFit,
    EnsembleResult,
    FringePattern,
    RamseyFit,
    SqrtQuadraticFit,
    VisibilityEstimate,
    VisibilityMethod,
)
from .geometry import ChipGeometry, FieldModel, FieldSample
from .manifest import RunManifest
from .noise import Correlation, FluctuationSpec, NoiseRealization
from .results import HalfLoopResult, OptimizationResult, ScanPoint
from .sequence import (
    Echo,
    FullLoopSequence,
    HalfLoopSequence,
    NoiseInjection,
    Scheme,
    default_scenario_path,
    load_scenarios,
)
from .wavefunction import Grid1D, WaveFunction
from .wavepacket import FullLoopOutcome, OverlapInputs, ScaleMode, WavepacketState

__all__ = [
    "BECParams",
    "CONSTANTS",
    "ChipGeometry",
    "Correlation",
    "DecayFit",
    "Echo",
    "EnsembleResult",
    "EnvelopeSineFit",
    "FarFieldFringes",
    "FieldModel",
    "FieldSample",
    "FluctuationSpec",
    "FringeFit",
    "FringePattern",
    "FullLoopOutcome",
    "FullLoopSequence",
    "Grid1D",
    "HalfLoopAnalytic",
    "HalfLoopResult",
    "HalfLoopSequence",
    "NoiseInjection",
    "NoiseRealization",
    "OptimizationResult",
    "OverlapInputs",
    "PhaseSpaceMatrix",
    "PhysicalConstants",
    "RamseyFit",
    "RunManifest",
    "ScaleMode",
    "ScanPoint",
    "Scheme",
    "SqrtQuadraticFit",
    "VisibilityEstimate",
    "VisibilityMethod",
    "WaveFunction",
    "WavepacketState",
    "default_scenario_path",
    "load_scenarios",
]
