"""
Worker for running one shot of an ensemble in a background thread.
"""

import logging
from typing import Any, Callable, Optional, Tuple

from PySide6.QtCore import QObject, QRunnable, Signal, Slot

logger = logging.getLogger(__name__)


class ShotWorkerSignals(QObject):
    """Signals for ShotWorker."""

    finished = Signal(int)  # shot index
    error = Signal(tuple)
    progress = Signal(int, int, str)  # shot, total, message


class ShotWorker(QRunnable):
    """
    Worker evaluating a shot task for one shot index.

    The result stays on the instance, so the worker is not auto-deleted by
    the pool and the caller collects results after waitForDone().
    """

    def __init__(self, shot_index: int, total: int, task: Callable[[int], Any]):
        """
        Initialize ShotWorker.

        Args:
            shot_index: Index of the shot, also selects its random stream
            total: Number of shots in the ensemble
            task: Callable mapping a shot index to its result
        """
        super().__init__()
        self.setAutoDelete(False)
        self.shot_index = shot_index
        self.total = total
        self.task = task
        self.result: Any = None
        self.error_info: Optional[Tuple[type, Exception, str]] = None
        self.signals = ShotWorkerSignals()

    @Slot()
    def run(self):
        """Execute the shot task."""
        try:
            self.signals.progress.emit(self.shot_index, self.total, f"Shot {self.shot_index}")
            self.result = self.task(self.shot_index)
            logger.debug(f"Shot {self.shot_index + 1}/{self.total} done")
            self.signals.finished.emit(self.shot_index)
        except Exception as e:
            logger.error(f"Error in shot {self.shot_index}: {e}", exc_info=True)
            self.error_info = (type(e), e, str(e))
            self.signals.error.emit(self.error_info)
