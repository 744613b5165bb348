"""Result records of half-loop runs, full-loop scans and sequence optimization."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .fringe import FringeFit, FringePattern, VisibilityEstimate
from .sequence import FullLoopSequence, HalfLoopSequence


@dataclass
class HalfLoopResult:
    """Patterns and visibilities of one half-loop scenario.

    kick is the differential wavevector after the splitting pulse in 1/m;
    phase_slope is the change of the split phase per relative current change.
    """

    sequence: HalfLoopSequence
    patterns: List[FringePattern]
    multishot: FringePattern
    visibility: VisibilityEstimate
    multishot_visibility: VisibilityEstimate
    single_shot: List[float]
    fit: Optional[FringeFit]
    kick: float
    phase_slope: float
    seed: int
    fringe_phases: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class ScanPoint:
    reverse_duration: float
    population: float
    visibility: float
    phase: float


@dataclass
class OptimizationResult:
    sequence: FullLoopSequence
    visibility: float
    parameters: Dict[str, float]
    boundary: bool = False
    degenerate: bool = False
    evaluations: int = 0
