"""
Tests for ShotWorker and the shot pool.
"""

import pytest

from sgisim.workers.shot_pool import run_shot_workers
from sgisim.workers.shot_worker import ShotWorker, ShotWorkerSignals


class TestShotWorkerSignals:
    """Test cases for ShotWorkerSignals."""

    def test_signals_exist(self):
        """Test that all signals are defined."""
        signals = ShotWorkerSignals()
        assert hasattr(signals, "finished")
        assert hasattr(signals, "error")
        assert hasattr(signals, "progress")


class TestShotWorker:
    """Test cases for ShotWorker."""

    def test_run_stores_result(self):
        """Test that a successful run keeps the result on the worker."""
        worker = ShotWorker(3, 5, lambda shot: shot * 10)

        worker.run()

        assert worker.result == 30
        assert worker.error_info is None
        assert not worker.autoDelete()

    def test_run_captures_error(self):
        """Test that an exception is stored instead of raised."""

        def task(shot):
            raise RuntimeError(f"shot {shot} broke")

        worker = ShotWorker(1, 2, task)
        worker.run()

        assert worker.result is None
        assert worker.error_info[0] is RuntimeError
        assert worker.error_info[2] == "shot 1 broke"


class TestRunShotWorkers:
    """Test cases for run_shot_workers."""

    def test_results_in_shot_order(self):
        """Test that results come back in shot-index order."""
        assert run_shot_workers(lambda shot: shot**2, 8, threads=4) == [0, 1, 4, 9, 16, 25, 36, 49]

    def test_thread_count_does_not_change_results(self):
        """Test that one and many threads give identical results."""

        def task(shot):
            return sum(range(shot * 1000))

        assert run_shot_workers(task, 6, threads=1) == run_shot_workers(task, 6, threads=3)

    def test_first_error_raised(self):
        """Test that the lowest failing shot's exception is re-raised."""

        def task(shot):
            if shot in (2, 4):
                raise ValueError(f"bad shot {shot}")
            return shot

        with pytest.raises(ValueError, match="bad shot 2"):
            run_shot_workers(task, 6, threads=2)

    def test_rejects_bad_arguments(self):
        """Test that zero shots or threads raise."""
        with pytest.raises(ValueError, match="shots must be at least 1"):
            run_shot_workers(lambda shot: shot, 0, threads=1)
        with pytest.raises(ValueError, match="Thread count must be positive"):
            run_shot_workers(lambda shot: shot, 2, threads=0)
