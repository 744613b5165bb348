"""Tests for FringeService."""

import json

import numpy as np
import pytest

from sgisim.models import FringePattern, Grid1D, VisibilityMethod
from sgisim.services.fringe_service import FringeService
from sgisim.utils.errors import DegeneratePeriodError, InsufficientDataError


@pytest.fixture
def service():
    return FringeService()


@pytest.fixture
def grid():
    return Grid1D.centered(0.0, dz=10e-9, n_points=4001)


@pytest.fixture
def pattern(grid):
    return FringeService.synthetic_pattern(
        grid, amplitude=2.0, center=0.5e-6, sigma=4e-6, visibility=0.7, wavelength=1.5e-6, phase=0.4
    )


class TestSyntheticPattern:
    """Test cases for the synthetic fringe generator."""

    def test_envelope_without_visibility(self, grid):
        """Test that V = 0 leaves a plain Gaussian plus offset."""
        pattern = FringeService.synthetic_pattern(grid, 1.0, 0.0, 3e-6, 0.0, 1e-6, 0.0, offset=0.1)

        expected = np.exp(-(grid.z**2) / (2 * (3e-6) ** 2)) + 0.1
        np.testing.assert_allclose(pattern.density, expected)

    def test_density_length_checked(self, grid):
        """Test that a density of the wrong length raises."""
        with pytest.raises(ValueError, match="does not match grid"):
            FringePattern(grid=grid, density=np.ones(10))


class TestSpectral:
    """Test cases for the Fourier estimator."""

    def test_dominant_wavevector(self, service, pattern):
        """Test that the refined peak sits at 2*pi/lambda."""
        assert service.dominant_wavevector(pattern) == pytest.approx(2 * np.pi / 1.5e-6, rel=2e-3)

    def test_fft_visibility(self, service, pattern):
        """Test that the Fourier visibility reproduces the input visibility."""
        assert service.fft_visibility(pattern) == pytest.approx(0.7, rel=2e-2)

    def test_fft_visibility_translation_and_scale(self, service, grid, pattern):
        """Test that shifting and rescaling the pattern keeps the Fourier visibility."""
        shifted = FringeService.synthetic_pattern(
            grid, amplitude=5.0, center=-1.5e-6, sigma=4e-6, visibility=0.7, wavelength=1.5e-6, phase=2.1
        )

        assert service.fft_visibility(shifted) == pytest.approx(service.fft_visibility(pattern), rel=2e-3)

    def test_fft_visibility_spread_wavevectors(self, service):
        """Test that fringes spread over neighbouring bins are summed over the window."""
        n_points = 1024
        index = np.arange(n_points)
        weights = {38: 1.0, 39: 2.0, 40: 3.0, 41: 2.0, 42: 1.0}
        density = sum(w * (1.0 + np.cos(2 * np.pi * b * index / n_points)) for b, w in weights.items()) / 9.0
        spread = FringePattern(grid=Grid1D.centered(0.0, dz=1e-7, n_points=n_points), density=density)

        assert service.fft_visibility(spread) == pytest.approx(1.0, abs=1e-9)

    def test_flat_pattern_has_no_period(self, service, grid):
        """Test that a constant density raises DegeneratePeriodError."""
        flat = FringePattern(grid=grid, density=np.ones(grid.n_points))

        with pytest.raises(DegeneratePeriodError):
            service.fft_visibility(flat)


class TestFitFringe:
    """Test cases for the Gaussian-enveloped sine fit."""

    def test_recovers_parameters(self, service, pattern):
        """Test that a noiseless pattern is fitted exactly."""
        fit = service.fit_fringe(pattern)

        assert fit.visibility_raw == pytest.approx(0.7, abs=1e-4)
        assert fit.visibility == pytest.approx(0.7, abs=1e-4)
        assert fit.period == pytest.approx(1.5e-6, rel=1e-4)
        assert fit.center == pytest.approx(0.5e-6, abs=1e-9)
        assert fit.width == pytest.approx(4e-6, rel=1e-4)
        assert fit.phase == pytest.approx(0.4, abs=1e-3)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-8)
        assert fit.chirp is None
        assert set(fit.errors) == {"amplitude", "center", "width", "visibility", "period", "phase", "offset"}

    def test_residual_norm_of_exact_fit(self, service, pattern):
        """Test that the fitted model reproduces the pattern."""
        fit = service.fit_fringe(pattern)

        assert FringeService.fit_residual_norm(pattern, fit) < 1e-5

    def test_chirped_fit(self, service, grid):
        """Test that a quadratic fringe phase is recovered by the chirped model."""
        pattern = FringeService.synthetic_pattern(grid, 1.0, 0.0, 4e-6, 0.6, 1.5e-6, 0.0, chirp=2e9)

        fit = service.fit_fringe(pattern, chirped=True)

        assert fit.chirp == pytest.approx(2e9, rel=0.05)
        assert fit.visibility_raw == pytest.approx(0.6, abs=1e-3)
        assert "chirp" in fit.errors

    def test_period_hint(self, service, pattern):
        """Test that a period hint gives the same fit."""
        fit = service.fit_fringe(pattern, period_hint=1.5e-6)

        assert fit.visibility_raw == pytest.approx(0.7, abs=1e-4)

    def test_rejects_non_positive_hint(self, service, pattern):
        """Test that a non-positive period hint raises."""
        with pytest.raises(ValueError, match="period_hint must be positive"):
            service.fit_fringe(pattern, period_hint=0.0)

    def test_too_few_oscillations(self, service, grid):
        """Test that a pattern with under 3 visible fringes raises."""
        broad = FringeService.synthetic_pattern(grid, 1.0, 0.0, 3e-6, 0.5, 20e-6, 0.0)

        with pytest.raises(DegeneratePeriodError):
            service.fit_fringe(broad)

    def test_estimate_visibility(self, service, pattern):
        """Test both pattern estimators and the rejection of the others."""
        fit = service.estimate_visibility(pattern, VisibilityMethod.Fit)
        fft = service.estimate_visibility(pattern, VisibilityMethod.Fft)

        assert fit.value == pytest.approx(0.7, abs=1e-3)
        assert fit.method == "fit"
        assert fft.method == "fft"
        with pytest.raises(ValueError, match="does not apply"):
            service.estimate_visibility(pattern, VisibilityMethod.Analytic)


class TestRamsey:
    """Test cases for the Ramsey contrast fit."""

    @staticmethod
    def _samples(contrast=0.8, phi0=0.4, n=12):
        phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return list(zip(phi, 0.5 * contrast * np.sin(phi + phi0) + 0.5))

    def test_recovers_contrast(self):
        """Test that contrast and phase are recovered and normalized."""
        fit = FringeService.fit_ramsey(self._samples(), reference_contrast=0.9)

        assert fit.contrast == pytest.approx(0.8, abs=1e-6)
        assert fit.phi0 == pytest.approx(0.4, abs=1e-6)
        assert fit.offset == pytest.approx(0.5, abs=1e-6)
        assert fit.normalized_contrast == pytest.approx(0.8 / 0.9, abs=1e-6)

    def test_negative_contrast_folded(self):
        """Test that the contrast is reported positive."""
        samples = [(phi, 1.0 - p) for phi, p in self._samples()]

        fit = FringeService.fit_ramsey(samples)

        assert fit.contrast == pytest.approx(0.8, abs=1e-6)
        assert fit.normalized_contrast is None

    def test_too_few_samples(self):
        """Test that fewer than 6 samples raise."""
        with pytest.raises(InsufficientDataError, match="at least 6"):
            FringeService.fit_ramsey(self._samples(n=5))

    def test_short_span(self):
        """Test that samples covering half a period raise."""
        phi = np.linspace(0.0, np.pi, 10)
        samples = list(zip(phi, 0.5 + 0.4 * np.sin(phi)))

        with pytest.raises(InsufficientDataError, match="full period"):
            FringeService.fit_ramsey(samples)

    def test_rejects_bad_reference(self):
        """Test that a non-positive reference contrast raises."""
        with pytest.raises(ValueError, match="Reference contrast"):
            FringeService.fit_ramsey(self._samples(), reference_contrast=0.0)


class TestCurveFits:
    """Test cases for the decay, envelope and expansion fits."""

    def test_visibility_decay(self):
        """Test that exact cubic-exponent decay data return its coefficients."""
        t = np.linspace(0.0, 50e-6, 11)
        v = np.exp(-(1e3 * t + 1e8 * t**2 + 1e12 * t**3))

        fit = FringeService.fit_visibility_decay(list(zip(t, v)))

        assert fit.coefficients == pytest.approx([1e3, 1e8, 1e12], rel=1e-6)
        assert fit.n_points == 11

    def test_decay_drops_low_visibility(self):
        """Test that points with V <= 0.2 are discarded."""
        points = [(1e-6, 0.9), (2e-6, 0.8), (3e-6, 0.15), (4e-6, 0.1), (5e-6, 0.05)]

        with pytest.raises(InsufficientDataError, match="4 points"):
            FringeService.fit_visibility_decay(points)

    def test_envelope_sine(self):
        """Test that the optimum of a Gaussian-enveloped oscillation is found."""
        t = np.linspace(0.0, 100e-6, 201)
        population = 0.5 + 0.3 * np.exp(-((t - 60e-6) ** 2) / (2 * (15e-6) ** 2)) * np.sin(2 * np.pi * 1e5 * t + 0.2)

        fit = FringeService.fit_envelope_sine(list(zip(t, population)))

        assert fit.t_peak == pytest.approx(60e-6, abs=1e-6)
        assert fit.width == pytest.approx(15e-6, rel=1e-2)
        assert fit.frequency == pytest.approx(2 * np.pi * 1e5, rel=1e-3)
        assert fit.amplitude == pytest.approx(0.3, rel=1e-2)

    def test_envelope_flat_scan(self):
        """Test that a scan without oscillation raises DegeneratePeriodError."""
        samples = [(t, 0.5) for t in np.linspace(0.0, 1e-4, 20)]

        with pytest.raises(DegeneratePeriodError):
            FringeService.fit_envelope_sine(samples)

    def test_envelope_too_few_samples(self):
        """Test that fewer than 8 samples raise."""
        with pytest.raises(InsufficientDataError):
            FringeService.fit_envelope_sine([(t, np.sin(t)) for t in range(5)])

    def test_sqrt_quadratic(self):
        """Test the expansion law fit and its negative-offset flag."""
        t = np.linspace(0.0, 2e-3, 6)
        fit = FringeService.fit_sqrt_quadratic(list(zip(t, np.sqrt(4e-12 + 1e-6 * t**2))))

        assert fit.a == pytest.approx(4e-12, rel=1e-6)
        assert fit.b == pytest.approx(1e-6, rel=1e-6)
        assert not fit.negative_offset

        flagged = FringeService.fit_sqrt_quadratic([(1.0, np.sqrt(0.5)), (2.0, np.sqrt(3.5)), (3.0, np.sqrt(8.5))])

        assert flagged.a == pytest.approx(-0.5)
        assert flagged.negative_offset


class TestFiles:
    """Test cases for fit reports and pattern input."""

    def test_fit_report(self, service, pattern, tmp_path):
        """Test that the report carries value/sigma pairs."""
        path = tmp_path / "fit.json"

        service.fringe_fit_to_json(service.fit_fringe(pattern), path)
        report = json.loads(path.read_text())

        assert report["visibility"]["value"] == pytest.approx(0.7, abs=1e-4)
        assert set(report["period"]) == {"value", "sigma"}
        assert "visibility_clamped" in report
        assert "r_squared" in report

    def test_read_pattern_csv(self, tmp_path):
        """Test that a commented CSV is read onto a uniform grid."""
        path = tmp_path / "pattern.csv"
        z = np.linspace(-1e-6, 1e-6, 21)
        rows = "\n".join(f"{a:.12e},{b:.12e}" for a, b in zip(z, np.cos(z * 1e7) ** 2))
        path.write_text(f"# measured\n{rows}\n")

        pattern = FringeService.read_pattern_csv(path)

        assert pattern.grid.n_points == 21
        assert pattern.grid.dz == pytest.approx(1e-7)
        assert pattern.grid.z_min == pytest.approx(-1e-6)

    def test_read_pattern_rejects_irregular_grid(self, tmp_path):
        """Test that non-uniform positions raise."""
        path = tmp_path / "pattern.csv"
        z = np.concatenate([np.linspace(0.0, 1e-6, 16), [2e-6, 5e-6]])
        path.write_text("\n".join(f"{a:.12e},1.0" for a in z))

        with pytest.raises(ValueError, match="uniform grid"):
            FringeService.read_pattern_csv(path)
