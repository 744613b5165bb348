"""
Workers package for sgisim.
Contains thread-pool workers for ensemble shots.
"""

from .shot_pool import run_shot_workers
from .shot_worker import ShotWorker

__all__ = ["ShotWorker", "run_shot_workers"]
