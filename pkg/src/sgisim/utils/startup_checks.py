"""Startup checks for output location and run inputs."""

import logging
import tempfile
from pathlib import Path
from typing import List, Optional, Tuple

from .config import config

logger = logging.getLogger(__name__)


def check_output_dir() -> Tuple[bool, str]:
    """Check that the output directory can be created and written.

    Returns:
        Tuple of (success, message)
    """
    if not config.ensure_output_dir():
        return False, f"Output directory cannot be created: {config.output_dir}"

    try:
        with tempfile.NamedTemporaryFile(dir=config.output_dir, delete=True):
            pass
        return True, f"Output directory writable: {config.output_dir}"
    except Exception as e:
        return False, f"Output directory not writable: {e}"


def check_scenario_file(path: Optional[Path]) -> Tuple[bool, str]:
    """Check that the scenario file exists and parses.

    Returns:
        Tuple of (success, message)
    """
    from ..models.sequence import default_scenario_path, load_scenarios

    scenario_path = path or default_scenario_path()
    if not scenario_path.is_file():
        return False, f"Scenario file not found: {scenario_path}"

    try:
        scenarios = load_scenarios(scenario_path)
        return True, f"{len(scenarios)} scenarios in {scenario_path.name}"
    except Exception as e:
        return False, f"Scenario file invalid: {e}"


def check_threads() -> Tuple[bool, str]:
    """Check that the resolved thread count is usable.

    Returns:
        Tuple of (success, message)
    """
    threads = config.threads if config.threads is not None else config.resolve_threads()
    if threads < 1:
        return False, f"Thread count must be positive, got {threads}"
    return True, f"Using {threads} worker threads"


def run_all_checks(scenario_path: Optional[Path] = None) -> Tuple[bool, List[str]]:
    """Run all startup checks.

    Returns:
        Tuple of (all_passed, list_of_messages)
    """
    messages = []
    all_passed = True

    for name, check in (
        ("Output", check_output_dir),
        ("Scenarios", lambda: check_scenario_file(scenario_path)),
        ("Threads", check_threads),
    ):
        success, message = check()
        messages.append(f"{'✓' if success else '✗'} {name}: {message}")
        if not success:
            all_passed = False
            logger.error(f"Startup check failed: {message}")

    return all_passed, messages
