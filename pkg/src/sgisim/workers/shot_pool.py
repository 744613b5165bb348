"""
Thread-pool execution of independent ensemble shots.
"""

import logging
from typing import Any, Callable, List, Optional

from PySide6.QtCore import QThreadPool

from ..utils.config import config
from .shot_worker import ShotWorker

logger = logging.getLogger(__name__)


def run_shot_workers(
    task: Callable[[int], Any], shots: int, threads: Optional[int] = None
) -> List[Any]:
    """
    Run task(0) … task(shots − 1) on a thread pool.

    Args:
        task: Callable mapping a shot index to its result
        shots: Number of shots
        threads: Thread cap, resolved from the global config when None

    Returns:
        Results in shot-index order

    Raises:
        Exception: The first error raised by any shot, in shot-index order
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    threads = config.resolve_threads() if threads is None else threads
    if threads < 1:
        raise ValueError(f"Thread count must be positive, got {threads}")

    pool = QThreadPool()
    pool.setMaxThreadCount(min(threads, shots))
    workers = [ShotWorker(index, shots, task) for index in range(shots)]
    for worker in workers:
        pool.start(worker)
    pool.waitForDone()

    for worker in workers:
        if worker.error_info is not None:
            _, exception, message = worker.error_info
            logger.error(f"Ensemble failed at shot {worker.shot_index}: {message}")
            raise exception

    logger.debug(f"Ran {shots} shots on {pool.maxThreadCount()} threads")
    return [worker.result for worker in workers]
