"""
Utilities package for sgisim.
Contains configuration, unit conversion, errors and startup checks.
"""

from . import units
from .config import Config, SimulationConfig, config, load_simulation_config
from .errors import (
    DegeneratePeriodError,
    GridMismatchError,
    GridTooLargeError,
    InstabilityError,
    InsufficientDataError,
    NonConvergenceError,
    NoRootError,
    ScenarioValidationError,
    SingularPositionError,
)
from .startup_checks import run_all_checks

__all__ = [
    "Config",
    "DegeneratePeriodError",
    "GridMismatchError",
    "GridTooLargeError",
    "InstabilityError",
    "InsufficientDataError",
    "NoRootError",
    "NonConvergenceError",
    "ScenarioValidationError",
    "SimulationConfig",
    "SingularPositionError",
    "config",
    "load_simulation_config",
    "run_all_checks",
    "units",
]
