"""Run manifest written next to every set of output files."""

from dataclasses import dataclass, field
from typing import List, Optional

from dataclasses_json import dataclass_json


@dataclass_json
@dataclass
class RunManifest:
    command: str
    config_path: Optional[str]
    seed: int
    output_dir: str
    tool_version: str
    config_hash: str = ""
    files: List[str] = field(default_factory=list)
    failed_scenarios: List[str] = field(default_factory=list)
    duration_s: float = 0.0
