"""Configuration management for sgisim."""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from dataclasses_json import dataclass_json

from . import units

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "SGISIM_THREADS"


class Config:
    """Application configuration."""

    def __init__(self):
        """Initialize configuration with default values."""
        self.output_dir: Path = Path.cwd() / "sgisim_output"
        self.threads: Optional[int] = None
        self.log_file: str = "sgisim.log"

    def ensure_output_dir(self) -> bool:
        """Create output directory if it doesn't exist.

        Returns:
            bool: True if directory exists or was created successfully, False otherwise.
        """
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            logger.info(f"Output directory ready: {self.output_dir}")
            return True
        except Exception as e:
            logger.error(f"Failed to create output directory: {e}")
            return False

    def resolve_threads(self, cli_value: Optional[int] = None) -> int:
        """Resolve the number of worker threads for shot execution.

        Args:
            cli_value: Value passed via --threads, takes precedence when set

        Returns:
            Positive thread count.
        """
        if cli_value is not None:
            self.threads = cli_value
            return cli_value

        env_value = os.environ.get(THREADS_ENV_VAR)
        if env_value:
            try:
                self.threads = int(env_value)
                logger.debug(f"Thread count taken from {THREADS_ENV_VAR}: {self.threads}")
                return self.threads
            except ValueError:
                logger.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={env_value!r}")

        self.threads = os.cpu_count() or 1
        return self.threads


@dataclass_json
@dataclass
class WignerConfig:
    center_a_um: float = -2.0
    center_b_um: float = 2.0
    momentum_a_hbar_per_um: float = 0.0
    momentum_b_hbar_per_um: float = 0.0
    sigma_um: float = 0.5
    z_min_um: float = -5.0
    z_max_um: float = 5.0
    z_points: int = 201
    k_max_per_um: float = 10.0
    k_points: int = 201


@dataclass_json
@dataclass
class SimulationConfig:
    """Numeric run settings, stored with unit-suffixed keys."""

    scenario_file: Optional[str] = None
    seed: int = 20231
    field_model: str = "ThinWire"
    wire_spacing_um: float = 100.0
    wire_width_um: float = 40.0
    wire_thickness_um: float = 2.0
    wire_length_mm: float = 10.0
    bias_G: float = 36.7
    stop_frequency_Hz: float = 850.0
    sigma_z_um: float = 1.2
    sigma_z_analytic_um: float = 1.53
    kappa_per_um_us: float = 0.86
    z_offset_um: float = 6.5
    rel_current_rms: float = 0.018
    high_rel_current_rms: float = 0.003
    mc_shots: int = 200
    visibility_method: str = "fit"
    far_field_points: int = 1024
    pulse_dt_us: float = 0.01
    delay_dt_us: float = 1.0
    randomvector_shots: int = 40
    randomvector_epsilon: float = 0.018
    randomvector_decay_epsilons: List[float] = field(
        default_factory=lambda: [1e-5, 1e-4, 1e-3]
    )
    randomvector_decay_t1_us: List[float] = field(
        default_factory=lambda: [10.0, 25.0, 40.0, 55.0, 70.0, 85.0, 100.0]
    )
    quantum_points: int = 3000
    quantum_dz_nm: float = 5.0
    quantum_dt_us: float = 0.01
    quantum_z_center_um: float = 95.0
    scale_mode: str = "ThomasFermi"
    bec_atom_count: int = 10000
    trap_frequencies_Hz: List[float] = field(default_factory=lambda: [38.0, 127.0, 127.0])
    sigma_v_mm_s: float = 0.3
    hd_z_max_um: float = 2.88
    hd_dp_max_hbar_per_um: float = 5.0
    hd_dz_max_um: float = 6.0
    hd_points: int = 121
    scan_points: int = 41
    scan_half_range_us: float = 3.0
    analysis_phase: float = 0.0
    wigner: WignerConfig = field(default_factory=WignerConfig)

    def config_hash(self) -> str:
        """Return the SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def sigma_z(self) -> float:
        return units.um(self.sigma_z_um)

    @property
    def sigma_z_analytic(self) -> float:
        return units.um(self.sigma_z_analytic_um)

    @property
    def stop_omega(self) -> float:
        return units.hz_to_rad(self.stop_frequency_Hz)

    @property
    def kappa(self) -> float:
        return units.kappa_si(self.kappa_per_um_us)

    @property
    def z_offset(self) -> float:
        return units.um(self.z_offset_um)

    @property
    def pulse_dt(self) -> float:
        return units.us(self.pulse_dt_us)

    @property
    def delay_dt(self) -> float:
        return units.us(self.delay_dt_us)

    @property
    def quantum_dt(self) -> float:
        return units.us(self.quantum_dt_us)

    @property
    def trap_omegas(self) -> List[float]:
        return [units.hz_to_rad(f) for f in self.trap_frequencies_Hz]


def load_simulation_config(path: Optional[Path]) -> SimulationConfig:
    """Load simulation settings from a JSON file.

    Args:
        path: Path to the JSON file, or None for defaults

    Returns:
        SimulationConfig instance.

    Raises:
        FileNotFoundError: If the config file doesn't exist.
        ValueError: If the file content is not a JSON object.
    """
    if path is None:
        logger.info("No config file given, using defaults")
        return SimulationConfig()

    logger.info(f"Loading simulation config from {path}")
    with open(path, encoding="utf-8") as f:
        data = json.load(f)

    if not isinstance(data, dict):
        raise ValueError(f"Config file {path} must contain a JSON object")

    return SimulationConfig.schema().load(data)


# Global configuration instance
config = Config()
