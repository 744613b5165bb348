"""Tests for sequence models and scenario loading."""

import json

import pytest

from sgisim.models import (
    Echo,
    FullLoopSequence,
    HalfLoopSequence,
    NoiseInjection,
    Scheme,
    load_scenarios,
)
from sgisim.utils.errors import ScenarioValidationError


def _full_loop(**changes) -> FullLoopSequence:
    values = dict(
        T_d0=10e-6,
        T1=5e-6,
        T_d1=20e-6,
        T2=3e-6,
        T3=2e-6,
        T_d2=20e-6,
        T4=5e-6,
        TOF=100e-6,
        T_R=400e-6,
        z0_trap=90e-6,
        current=0.86,
    )
    values.update(changes)
    return FullLoopSequence(**values)


class TestHalfLoopSequence:
    """Test cases for HalfLoopSequence."""

    def test_rejects_negative_time(self):
        """Test that negative times are rejected."""
        with pytest.raises(ValueError, match="T1 must be non-negative"):
            HalfLoopSequence(T1=-1e-6, Td=1e-4, T2=2e-4, TOF=6e-3, z_trap=87.5e-6, current=0.86)

    def test_rejects_trap_outside_window(self):
        """Test the z_trap sanity window."""
        with pytest.raises(ValueError, match="z_trap"):
            HalfLoopSequence(T1=4e-6, Td=1e-4, T2=2e-4, TOF=6e-3, z_trap=200e-6, current=0.86)


class TestFullLoopSequence:
    """Test cases for FullLoopSequence."""

    def test_ramsey_time_must_cover_loop(self):
        """Test that T_R shorter than the loop plus TOF is rejected."""
        with pytest.raises(ValueError, match="T_R"):
            _full_loop(T_R=50e-6)

    def test_current_inversion_signs(self):
        """Test the gradient sign pattern of the current-inversion scheme."""
        signs = [sign for _, duration, sign in _full_loop().segments() if sign != 0]

        assert signs == [1.0, -1.0, -1.0, 1.0]

    def test_spin_inversion_signs_and_flips(self):
        """Test that spin inversion keeps the current sign and flips the spins."""
        seq = _full_loop(scheme=Scheme.SpinInversion)

        signs = [sign for _, _, sign in seq.segments() if sign != 0]
        flips = seq.spin_flip_times()

        assert signs == [1.0, 1.0, 1.0, 1.0]
        assert flips[0] == pytest.approx(10e-6 + 5e-6 + 20e-6)
        assert len(flips) == 3

    def test_echo_flip_times(self):
        """Test one- and two-pulse echo instants."""
        one = _full_loop(echo=Echo.OnePi).spin_flip_times()
        two = _full_loop(echo=Echo.TwoPi).spin_flip_times()

        assert one == [pytest.approx(10e-6 + 200e-6)]
        assert two == [pytest.approx(10e-6 + 100e-6), pytest.approx(10e-6 + 300e-6)]

    def test_with_reverse_duration_keeps_total_and_ratio(self):
        """Test that T2 + T3 + T_d2 and T2:T3 are preserved."""
        seq = _full_loop()

        scanned = seq.with_reverse_duration(8e-6)

        assert scanned.reverse_duration == pytest.approx(8e-6)
        assert scanned.T2 + scanned.T3 + scanned.T_d2 == pytest.approx(seq.T2 + seq.T3 + seq.T_d2)
        assert scanned.T2 / scanned.T3 == pytest.approx(seq.T2 / seq.T3)

    def test_with_reverse_duration_out_of_range(self):
        """Test that a total beyond T2 + T3 + T_d2 is rejected."""
        with pytest.raises(ValueError, match="outside"):
            _full_loop().with_reverse_duration(30e-6)


class TestNoiseInjection:
    """Test cases for NoiseInjection."""

    def test_silent_by_default(self):
        """Test the default noise settings."""
        noise = NoiseInjection()

        assert noise.is_silent
        assert noise.shots == 1

    def test_rejects_negative_std(self):
        """Test that negative standard deviations are rejected."""
        with pytest.raises(ValueError, match="rel_current_std"):
            NoiseInjection(rel_current_std=-0.1)

    def test_rejects_zero_shots(self):
        """Test that at least one shot is required."""
        with pytest.raises(ValueError, match="shots"):
            NoiseInjection(shots=0)


class TestLoadScenarios:
    """Test cases for load_scenarios."""

    def test_packaged_scenarios(self):
        """Test the packaged half- and full-loop scenarios."""
        scenarios = load_scenarios()
        half = [seq for seq in scenarios if isinstance(seq, HalfLoopSequence)]

        assert len(half) == 8
        first = half[0]
        assert first.label == "S1-T1-4"
        assert (first.T1, first.Td, first.T2, first.TOF) == pytest.approx((4e-6, 116e-6, 200e-6, 6760e-6))
        assert any(isinstance(seq, FullLoopSequence) for seq in scenarios)

    def test_empty_list(self, tmp_path):
        """Test that an empty scenario list loads as empty."""
        path = tmp_path / "empty.json"
        path.write_text("[]", encoding="utf-8")

        assert load_scenarios(path) == []

    def test_trap_outside_window_names_field(self, tmp_path):
        """Test that an out-of-range z_trap names the field."""
        path = tmp_path / "bad.json"
        entry = {
            "label": "bad",
            "type": "half",
            "times_us": {"T1": 4, "Td": 116, "T2": 200, "TOF": 6760},
            "current_mA": 860,
            "z_trap_um": 20,
        }
        path.write_text(json.dumps([entry]), encoding="utf-8")

        with pytest.raises(ScenarioValidationError, match="z_trap_um") as excinfo:
            load_scenarios(path)

        assert excinfo.value.field == "z_trap_um"
        assert excinfo.value.index == 0

    def test_missing_time_names_field(self, tmp_path):
        """Test that a missing time names the field."""
        path = tmp_path / "bad.json"
        entry = {
            "label": "short",
            "type": "half",
            "times_us": {"T1": 4, "Td": 116, "T2": 200},
            "current_mA": 860,
            "z_trap_um": 87.5,
        }
        path.write_text(json.dumps([entry]), encoding="utf-8")

        with pytest.raises(ScenarioValidationError, match="times_us.TOF"):
            load_scenarios(path)

    def test_duplicate_labels(self, tmp_path):
        """Test that duplicate labels are rejected."""
        entry = {
            "label": "twice",
            "type": "half",
            "times_us": {"T1": 4, "Td": 116, "T2": 200, "TOF": 6760},
            "current_mA": 860,
            "z_trap_um": 87.5,
        }
        path = tmp_path / "dup.json"
        path.write_text(json.dumps([entry, entry]), encoding="utf-8")

        with pytest.raises(ScenarioValidationError, match="Duplicate"):
            load_scenarios(path)

    def test_noise_fields_converted(self, tmp_path):
        """Test that unit-suffixed noise fields are converted to SI."""
        entry = {
            "label": "noisy",
            "type": "half",
            "times_us": {"T1": 4, "Td": 116, "T2": 200, "TOF": 6760},
            "current_mA": 860,
            "z_trap_um": 87.5,
            "noise": {"rel_current_std": 0.018, "initial_pos_std_um": 1.5, "shots": 20},
            "seed": 9,
        }
        path = tmp_path / "noisy.json"
        path.write_text(json.dumps([entry]), encoding="utf-8")

        (seq,) = load_scenarios(path)

        assert seq.noise.rel_current_std == pytest.approx(0.018)
        assert seq.noise.initial_pos_std == pytest.approx(1.5e-6)
        assert seq.noise.shots == 20
        assert seq.noise.seed == 9
