"""Tests for SequencerService."""

import numpy as np
import pytest

from sgisim.models import CONSTANTS, FullLoopSequence, HalfLoopSequence, NoiseInjection, VisibilityMethod
from sgisim.models.geometry import ChipGeometry
from sgisim.services.landscapes import PulseSchedule, UniformGradientLandscape
from sgisim.services.noise_service import NoiseService
from sgisim.services.sequencer_service import SequencerService
from sgisim.utils.errors import DegeneratePeriodError
from sgisim.utils.random_streams import shot_generator

HBAR = CONSTANTS.hbar
MASS = CONSTANTS.mass_rb87
MU_B = CONSTANTS.mu_bohr


def _split_factory(gradient: float = 100.0):
    def factory(current, t_split):
        return UniformGradientLandscape(gradient * current, PulseSchedule([(0.0, t_split, 1.0)]))

    return factory


def _loop_factory(gradient: float = 100.0):
    def factory(seq):
        return UniformGradientLandscape(gradient, PulseSchedule.from_segments(seq.segments()))

    return factory


def _half_loop(**changes) -> HalfLoopSequence:
    values = dict(T1=4e-6, Td=116e-6, T2=200e-6, TOF=6760e-6, z_trap=87.5e-6, current=1.0, label="H")
    values.update(changes)
    return HalfLoopSequence(**values)


def _full_loop(**changes) -> FullLoopSequence:
    values = dict(
        T_d0=10e-6,
        T1=5e-6,
        T_d1=20e-6,
        T2=5e-6,
        T3=5e-6,
        T_d2=20e-6,
        T4=5e-6,
        TOF=100e-6,
        T_R=400e-6,
        z0_trap=90e-6,
        current=1.0,
        label="F",
    )
    values.update(changes)
    return FullLoopSequence(**values)


@pytest.fixture
def service():
    return SequencerService()


class TestFarField:
    """Test cases for the far-field image of two branches."""

    def test_free_flight_image(self, service):
        """Test that a flight-only map spreads and keeps both branches normalized."""
        seq = _half_loop(Td=0.0, T2=0.0, TOF=1e-3)
        a, b, _ = service._split(seq, _split_factory(0.0)(1.0, seq.T1), seq.T1, 0.0, (1.2e-6,) * 3, 1e-8)

        pattern, image_a, image_b = service.far_field_pattern(a, b, 0.0, seq)

        expected = np.hypot(1.2e-6, HBAR * (seq.T1 + seq.TOF) / (2 * MASS * 1.2e-6))
        assert image_a.width(HBAR) == pytest.approx(expected, rel=1e-6)
        assert np.sum(pattern.density) * pattern.grid.dz == pytest.approx(4.0, rel=1e-6)
        assert pattern.time == seq.T1

    def test_extra_phase_on_fixed_grid(self, service):
        """Test that a pi phase on identical branches cancels the image on a given grid."""
        seq = _half_loop()
        a, b, _ = service._split(seq, _split_factory(0.0)(1.0, seq.T1), seq.T1, 0.0, (1.2e-6,) * 3, 1e-8)
        first, _, _ = service.far_field_pattern(a, b, 2 * np.pi * 850.0, seq)

        second, _, _ = service.far_field_pattern(a, b, 2 * np.pi * 850.0, seq, grid=first.grid, extra_phase=np.pi)

        assert second.grid == first.grid
        assert np.max(second.density) < 1e-12 * np.max(first.density)


class TestHalfLoop:
    """Test cases for Monte-Carlo half-loop runs."""

    def test_kick_and_shots(self, service):
        """Test the differential kick and the per-shot records."""
        seq = _half_loop()

        result = service.run_half_loop(
            seq, NoiseInjection(shots=3, seed=2), split_landscape=_split_factory(), method=VisibilityMethod.Fft, threads=2
        )

        assert result.kick == pytest.approx(0.5 * MU_B * 100.0 * seq.T1 / HBAR, rel=1e-9)
        assert len(result.patterns) == 3
        assert [pattern.shot_index for pattern in result.patterns] == [0, 1, 2]
        assert result.single_shot[0] == result.single_shot[1] == result.single_shot[2]
        assert result.seed == 2
        assert np.isfinite(result.phase_slope)
        assert result.sequence is seq

    def test_noisy_run_deterministic(self, service):
        """Test that a seeded noisy run is reproducible across thread counts."""
        seq = _half_loop()
        noise = NoiseInjection(rel_current_std=0.02, initial_pos_std=0.1e-6, phase_std=0.3, shots=4, seed=11)

        first = service.run_half_loop(seq, noise, split_landscape=_split_factory(), method=VisibilityMethod.Fft, threads=1)
        second = service.run_half_loop(seq, noise, split_landscape=_split_factory(), method=VisibilityMethod.Fft, threads=4)

        assert first.single_shot == second.single_shot
        np.testing.assert_array_equal(first.multishot.density, second.multishot.density)
        assert first.visibility.value == second.visibility.value

    def test_sequence_noise_used(self, service):
        """Test that the sequence's own noise settings apply when none are passed."""
        seq = _half_loop(noise=NoiseInjection(shots=2, seed=9))

        result = service.run_half_loop(seq, split_landscape=_split_factory(), method=VisibilityMethod.Fft, threads=1)

        assert len(result.patterns) == 2
        assert result.seed == 9

    def test_silent_noise_full_visibility(self, service):
        """Test that identical shots give V_N = 1."""
        result = service.run_half_loop(
            _half_loop(), NoiseInjection(shots=3, seed=4), split_landscape=_split_factory(),
            method=VisibilityMethod.Fft, threads=1,
        )

        assert result.visibility.value == pytest.approx(1.0, abs=0.01)
        assert not result.visibility.flagged

    def test_phase_noise_reduction(self, service):
        """Test that 0.1 rad of shot phase noise leaves V_N near 0.99."""
        noise = NoiseInjection(phase_std=0.1, shots=40, seed=6)

        result = service.run_half_loop(
            _half_loop(), noise, split_landscape=_split_factory(), method=VisibilityMethod.Fft, threads=2
        )

        phases = [0.1 * shot_generator(6, shot).standard_normal(5)[4] for shot in range(40)]
        assert result.visibility.value == pytest.approx(0.99, abs=0.01)
        assert result.visibility.value == pytest.approx(NoiseService.sample_ensemble_visibility(phases), abs=5e-3)

    def test_no_gradient_is_degenerate(self, service):
        """Test that a split without gradient raises DegeneratePeriodError."""
        with pytest.raises(DegeneratePeriodError):
            service.run_half_loop(_half_loop(), split_landscape=_split_factory(0.0), threads=1)

    def test_requires_field(self, service):
        """Test that neither geometry nor landscape factory raises."""
        with pytest.raises(ValueError, match="split landscape factory"):
            service.run_half_loop(_half_loop())


class TestFullLoopScan:
    """Test cases for T2 + T3 scans."""

    def test_scan_totals_clipped(self):
        """Test that scan values stay inside [0, T2 + T3 + T_d2]."""
        totals = SequencerService.scan_totals(_full_loop(), 40e-6, 5)

        assert totals[0] == 0.0
        assert totals[-1] == pytest.approx(30e-6)
        assert len(totals) == 5

    def test_scan_totals_needs_two_points(self):
        """Test that a one-point scan raises."""
        with pytest.raises(ValueError, match="at least 2 points"):
            SequencerService.scan_totals(_full_loop(), 1e-6, 1)

    def test_scan_peaks_at_closed_loop(self, service):
        """Test that the balanced T2 + T3 gives the highest visibility."""
        seq = _full_loop()
        totals = SequencerService.scan_totals(seq, 4e-6, 5)

        points = service.run_full_loop_scan(seq, totals, landscape_factory=_loop_factory(), pulse_dt=1e-7, threads=2)

        visibilities = [point.visibility for point in points]
        assert [point.reverse_duration for point in points] == pytest.approx(list(totals))
        assert int(np.argmax(visibilities)) == 2
        assert visibilities[2] == pytest.approx(1.0, abs=1e-9)
        assert max(visibilities[:2] + visibilities[3:]) < 0.5
        assert points[2].population == pytest.approx(0.5 * (1 + np.cos(points[2].phase)))

    def test_chip_scan_peak_off_symmetric_point(self, service):
        """Test that the chip field's curvature moves the scan peak away from T2 + T3 = T1 + T4."""
        seq = _full_loop()
        totals = seq.reverse_duration + np.array([-0.2e-6, -0.1e-6, 0.0, 0.1e-6, 0.2e-6])

        points = service.run_full_loop_scan(seq, totals, geometry=ChipGeometry(), pulse_dt=1e-8, threads=2)

        visibilities = [point.visibility for point in points]
        peak = int(np.argmax(visibilities))
        assert peak in (1, 3)
        assert visibilities[peak] > visibilities[2]

    def test_scan_rejects_inadmissible_total(self, service):
        """Test that a total beyond T2 + T3 + T_d2 raises."""
        with pytest.raises(ValueError, match="outside"):
            service.run_full_loop_scan(_full_loop(), [40e-6], landscape_factory=_loop_factory())


class TestOptimize:
    """Test cases for sequence optimization."""

    def test_finds_closing_pulse(self, service):
        """Test that the optimizer recovers the closing T4."""
        seq = _full_loop(T4=3e-6)

        result = service.optimize_sequence(
            seq, ["T4"], bounds={"T4": (0.0, 10e-6)}, landscape_factory=_loop_factory(), pulse_dt=1e-7, threads=2
        )

        assert result.parameters["T4"] == pytest.approx(5e-6, abs=1e-8)
        assert result.visibility == pytest.approx(1.0, abs=1e-6)
        assert result.sequence.T4 == pytest.approx(5e-6, abs=1e-8)
        assert not result.boundary
        assert not result.degenerate
        assert result.evaluations >= 21

    def test_refines_between_grid_points(self, service):
        """Test that the golden-section refinement finds an optimum off the coarse grid."""
        seq = _full_loop(T4=3e-6)

        def run(threads):
            return service.optimize_sequence(
                seq, ["T4"], bounds={"T4": (0.0, 9.7e-6)}, landscape_factory=_loop_factory(), pulse_dt=1e-7,
                threads=threads,
            )

        single, pooled = run(1), run(4)

        assert single.parameters["T4"] == pytest.approx(5e-6, abs=1e-9)
        assert single.visibility == pytest.approx(1.0, abs=1e-6)
        assert single.evaluations > 21
        assert pooled.evaluations == single.evaluations

    def test_degenerate_landscape(self, service):
        """Test that a flat objective is reported as degenerate."""
        seq = _full_loop()

        result = service.optimize_sequence(
            seq, ["T4", "reverse_duration"], landscape_factory=_loop_factory(0.0), pulse_dt=1e-7, threads=2
        )

        assert result.degenerate
        assert result.parameters == {"T4": seq.T4, "reverse_duration": seq.reverse_duration}
        assert result.evaluations == 81

    def test_parameter_count_checked(self, service):
        """Test that zero or five free parameters raise."""
        with pytest.raises(ValueError, match="Between 1 and 4"):
            service.optimize_sequence(_full_loop(), [])
        with pytest.raises(ValueError, match="Between 1 and 4"):
            service.optimize_sequence(_full_loop(), ["T1", "T2", "T3", "T4", "T_d1"])
