"""Pulse sequences, noise injection settings and scenario loading."""

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum, auto
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from dataclasses_json import dataclass_json

from ..utils import units
from ..utils.errors import ScenarioValidationError

logger = logging.getLogger(__name__)

Z_TRAP_WINDOW = (50e-6, 150e-6)


class Scheme(Enum):
    CurrentInversion = auto()
    SpinInversion = auto()

    def __str__(self):
        return self.name


class Echo(Enum):
    OnePi = auto()
    TwoPi = auto()

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class NoiseInjection:
    rel_current_std: float = 0.0
    pulse_timing_jitter: float = 0.0
    initial_pos_std: float = 0.0
    shots: int = 1
    seed: int = 0
    phase_std: float = 0.0
    phase_offset: float = 0.0
    stop_rel_current_std: float = 0.0

    def __post_init__(self):
        for name in (
            "rel_current_std",
            "pulse_timing_jitter",
            "initial_pos_std",
            "phase_std",
            "stop_rel_current_std",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"NoiseInjection.{name} must be non-negative")
        if self.shots < 1:
            raise ValueError(f"NoiseInjection.shots must be at least 1, got {self.shots}")

    @property
    def is_silent(self) -> bool:
        return (
            self.rel_current_std == 0
            and self.pulse_timing_jitter == 0
            and self.initial_pos_std == 0
            and self.phase_std == 0
            and self.stop_rel_current_std == 0
        )


@dataclass(frozen=True)
class HalfLoopSequence:
    T1: float
    Td: float
    T2: float
    TOF: float
    z_trap: float
    current: float
    t_drop: float = 0.9e-3
    label: str = ""
    data_set: Optional[str] = None
    noise: Optional[NoiseInjection] = None

    def __post_init__(self):
        for name in ("T1", "Td", "T2", "TOF", "t_drop"):
            if getattr(self, name) < 0:
                raise ValueError(f"HalfLoopSequence.{name} must be non-negative")
        if not Z_TRAP_WINDOW[0] < self.z_trap < Z_TRAP_WINDOW[1]:
            raise ValueError(
                f"HalfLoopSequence.z_trap={units.to_um(self.z_trap):.3f} um outside "
                f"({units.to_um(Z_TRAP_WINDOW[0]):.0f}, {units.to_um(Z_TRAP_WINDOW[1]):.0f}) um"
            )

    def with_times(self, **times) -> "HalfLoopSequence":
        return replace(self, **times)


@dataclass(frozen=True)
class FullLoopSequence:
    T_d0: float
    T1: float
    T_d1: float
    T2: float
    T3: float
    T_d2: float
    T4: float
    TOF: float
    T_R: float
    z0_trap: float
    current: float
    scheme: Scheme = Scheme.CurrentInversion
    echo: Echo = Echo.OnePi
    label: str = ""
    data_set: Optional[str] = None
    z0_uncertainty: float = 0.0

    def __post_init__(self):
        for name in ("T_d0", "T1", "T_d1", "T2", "T3", "T_d2", "T4", "TOF", "T_R"):
            if getattr(self, name) < 0:
                raise ValueError(f"FullLoopSequence.{name} must be non-negative")
        if self.T_R < self.loop_duration + self.TOF - 1e-12:
            raise ValueError(
                f"FullLoopSequence.T_R={units.to_us(self.T_R):.3f} us shorter than "
                f"T1..T4 + TOF = {units.to_us(self.loop_duration + self.TOF):.3f} us"
            )
        if not Z_TRAP_WINDOW[0] < self.z0_trap < Z_TRAP_WINDOW[1]:
            raise ValueError(
                f"FullLoopSequence.z0_trap={units.to_um(self.z0_trap):.3f} um outside "
                f"({units.to_um(Z_TRAP_WINDOW[0]):.0f}, {units.to_um(Z_TRAP_WINDOW[1]):.0f}) um"
            )

    @property
    def loop_duration(self) -> float:
        return self.T1 + self.T_d1 + self.T2 + self.T3 + self.T_d2 + self.T4

    @property
    def reverse_duration(self) -> float:
        """T2 + T3, the parameter scanned while T2 + T3 + T_d2 stays fixed."""
        return self.T2 + self.T3

    def with_reverse_duration(self, total: float) -> "FullLoopSequence":
        """Set T2 + T3 to ``total`` keeping T2 + T3 + T_d2 and the T2:T3 ratio."""
        fixed = self.T2 + self.T3 + self.T_d2
        if total < 0 or total > fixed:
            raise ValueError(
                f"T2+T3={units.to_us(total):.3f} us outside [0, {units.to_us(fixed):.3f}] us"
            )
        share = self.T2 / self.reverse_duration if self.reverse_duration > 0 else 0.5
        return replace(self, T2=share * total, T3=(1.0 - share) * total, T_d2=fixed - total)

    def with_times(self, **times) -> "FullLoopSequence":
        return replace(self, **times)

    def segments(self) -> List[Tuple[str, float, float]]:
        """Timed segments after release as (name, duration, current sign)."""
        reverse = -1.0 if self.scheme is Scheme.CurrentInversion else 1.0
        return [
            ("T_d0", self.T_d0, 0.0),
            ("T1", self.T1, 1.0),
            ("T_d1", self.T_d1, 0.0),
            ("T2", self.T2, reverse),
            ("T3", self.T3, reverse),
            ("T_d2", self.T_d2, 0.0),
            ("T4", self.T4, 1.0),
        ]

    def spin_flip_times(self) -> List[float]:
        """Instants (from release) at which the two branches swap mF labels."""
        ramsey_start = self.T_d0
        flips = []
        if self.scheme is Scheme.SpinInversion:
            flips.append(ramsey_start + self.T1 + self.T_d1)
            flips.append(ramsey_start + self.T1 + self.T_d1 + self.T2 + self.T3)
        if self.echo is Echo.OnePi:
            flips.append(ramsey_start + 0.5 * self.T_R)
        else:
            flips.append(ramsey_start + 0.25 * self.T_R)
            flips.append(ramsey_start + 0.75 * self.T_R)
        return sorted(flips)


Sequence = Union[HalfLoopSequence, FullLoopSequence]


@dataclass_json
@dataclass
class ScenarioEntry:
    label: str
    type: str
    times_us: Dict[str, float]
    current_mA: float
    z_trap_um: float
    scheme: Optional[str] = None
    echo: Optional[str] = None
    set: Optional[str] = None
    noise: Optional[Dict[str, float]] = None
    seed: Optional[int] = None
    uncertainty: Dict[str, float] = field(default_factory=dict)


HALF_LOOP_TIMES = ("T1", "Td", "T2", "TOF")
FULL_LOOP_TIMES = ("T_d0", "T1", "T_d1", "T2", "T3", "T_d2", "T4", "TOF", "T_R")
NOISE_KEYS = {
    "rel_current_std": 1.0,
    "pulse_timing_jitter_us": units.US,
    "initial_pos_std_um": units.UM,
    "shots": 1,
    "phase_std": 1.0,
    "phase_offset": 1.0,
    "stop_rel_current_std": 1.0,
}


def default_scenario_path() -> Path:
    return Path(__file__).parent.parent / "Scenarios.json"


def _noise_from_entry(entry: ScenarioEntry, index: int) -> Optional[NoiseInjection]:
    if entry.noise is None:
        return None
    values = {}
    for key, raw in entry.noise.items():
        if key not in NOISE_KEYS:
            raise ScenarioValidationError(
                f"Scenario {index} ('{entry.label}'): unknown noise field '{key}'",
                index=index,
                field=f"noise.{key}",
            )
        name = key.removesuffix("_us").removesuffix("_um")
        values[name] = int(raw) if key == "shots" else raw * NOISE_KEYS[key]
    return NoiseInjection(seed=entry.seed or 0, **values)


def _require_times(entry: ScenarioEntry, index: int, names: Tuple[str, ...]) -> Dict[str, float]:
    times = {}
    for name in names:
        if name not in entry.times_us:
            raise ScenarioValidationError(
                f"Scenario {index} ('{entry.label}'): missing field 'times_us.{name}'",
                index=index,
                field=f"times_us.{name}",
            )
        times[name] = units.us(entry.times_us[name])
    return times


def _sequence_from_entry(entry: ScenarioEntry, index: int) -> Sequence:
    noise = _noise_from_entry(entry, index)
    current = units.milliamp(entry.current_mA)
    z_trap = units.um(entry.z_trap_um)

    if not Z_TRAP_WINDOW[0] < z_trap < Z_TRAP_WINDOW[1]:
        raise ScenarioValidationError(
            f"Scenario {index} ('{entry.label}'): field 'z_trap_um'={entry.z_trap_um} "
            f"outside the (50, 150) um sanity window",
            index=index,
            field="z_trap_um",
        )

    try:
        if entry.type == "half":
            times = _require_times(entry, index, HALF_LOOP_TIMES)
            t_drop = units.us(entry.times_us.get("t_drop", 900.0))
            return HalfLoopSequence(
                z_trap=z_trap,
                current=current,
                t_drop=t_drop,
                label=entry.label,
                data_set=entry.set,
                noise=noise,
                **times,
            )
        if entry.type == "full":
            times = _require_times(entry, index, FULL_LOOP_TIMES)
            return FullLoopSequence(
                z0_trap=z_trap,
                current=current,
                scheme=Scheme[entry.scheme or "CurrentInversion"],
                echo=Echo[entry.echo or "OnePi"],
                label=entry.label,
                data_set=entry.set,
                z0_uncertainty=units.um(entry.uncertainty.get("z_trap_um", 0.0)),
                **times,
            )
    except KeyError as e:
        raise ScenarioValidationError(
            f"Scenario {index} ('{entry.label}'): unknown scheme or echo {e}",
            index=index,
            field="scheme/echo",
        )
    except ValueError as e:
        raise ScenarioValidationError(
            f"Scenario {index} ('{entry.label}'): {e}", index=index, field="times_us"
        )

    raise ScenarioValidationError(
        f"Scenario {index} ('{entry.label}'): field 'type' must be 'half' or 'full', got '{entry.type}'",
        index=index,
        field="type",
    )


def load_scenarios(path: Optional[Path] = None) -> List[Sequence]:
    """Load half-loop and full-loop scenarios from a JSON file.

    Args:
        path: Scenario file, defaults to the packaged Scenarios.json

    Returns:
        List of HalfLoopSequence and FullLoopSequence objects in file order.

    Raises:
        ScenarioValidationError: If an entry violates the schema or an invariant.
        FileNotFoundError: If the scenario file doesn't exist.
    """
    scenario_path = Path(path) if path is not None else default_scenario_path()

    logger.info(f"Loading scenarios from {scenario_path}")

    with open(scenario_path, encoding="utf-8") as f:
        try:
            scenarios_json = json.load(f)
        except json.JSONDecodeError as e:
            raise ScenarioValidationError(
                f"{scenario_path.name}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
            )

    if not isinstance(scenarios_json, list):
        raise ScenarioValidationError(f"{scenario_path.name}: top level must be a list")

    sequences: List[Sequence] = []
    seen_labels: set = set()

    for index, scenario_data in enumerate(scenarios_json):
        try:
            entry = ScenarioEntry.schema().load(scenario_data)
        except Exception as e:
            raise ScenarioValidationError(
                f"Scenario {index}: schema violation: {e}", index=index
            )

        if entry.label in seen_labels:
            error_msg = f"Duplicate scenario label found: '{entry.label}'"
            logger.error(error_msg)
            raise ScenarioValidationError(error_msg, index=index, field="label")

        seen_labels.add(entry.label)
        sequences.append(_sequence_from_entry(entry, index))

    logger.info("Loaded %d scenarios", len(sequences))
    return sequences
