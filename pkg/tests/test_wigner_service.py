"""Tests for WignerService."""

import numpy as np
import pytest

from sgisim.services.wigner_service import WIGNER_COLUMNS, GaussianPair, WignerService
from sgisim.utils.config import WignerConfig
from sgisim.utils.errors import GridTooLargeError


@pytest.fixture
def service():
    return WignerService()


@pytest.fixture
def cat():
    return GaussianPair(z_a=-2e-6, z_b=2e-6, k_a=0.0, k_b=0.0, sigma=0.5e-6)


@pytest.fixture
def axes():
    return np.linspace(-5e-6, 5e-6, 401), np.linspace(-10e6, 10e6, 201)


class TestGaussianPair:
    """Test cases for GaussianPair."""

    def test_overlap(self):
        """Test the overlap of displaced and boosted components."""
        pair = GaussianPair(z_a=0.0, z_b=1e-6, k_a=0.0, k_b=2e6, sigma=1e-6)

        expected = np.exp(-1.0 / 8.0 - 2.0) * np.exp(1j * 2e6 * 0.5e-6)
        assert pair.overlap == pytest.approx(expected)

    def test_norm_of_distant_pair(self, cat):
        """Test that well separated components add their norms."""
        assert cat.norm_squared == pytest.approx(2.0, abs=1e-6)

    def test_validation(self):
        """Test that non-positive widths and negative weights raise."""
        with pytest.raises(ValueError, match="sigma must be positive"):
            GaussianPair(0.0, 1e-6, 0.0, 0.0, sigma=0.0)
        with pytest.raises(ValueError, match="weight_b"):
            GaussianPair(0.0, 1e-6, 0.0, 0.0, sigma=1e-6, weight_b=-1.0)

    def test_from_config(self):
        """Test the conversion of the configured micrometre values."""
        pair = GaussianPair.from_config(WignerConfig(momentum_b_hbar_per_um=3.0))

        assert pair.z_a == pytest.approx(-2e-6)
        assert pair.z_b == pytest.approx(2e-6)
        assert pair.k_b == pytest.approx(3e6)
        assert pair.sigma == pytest.approx(0.5e-6)


class TestWigner:
    """Test cases for the closed-form Wigner density."""

    def test_single_gaussian_positive(self, service, axes):
        """Test that one Gaussian has a positive density peaking at 1/pi."""
        pair = GaussianPair(z_a=0.0, z_b=0.0, k_a=0.0, k_b=0.0, sigma=0.5e-6, weight_b=0.0)

        density = service.wigner(pair, *axes)

        assert density.shape == (401, 201)
        assert np.all(density >= 0.0)
        assert density.max() == pytest.approx(1.0 / np.pi)

    def test_interference_band_alternates(self, service, cat):
        """Test that the density between the components changes sign along k."""
        k_node = np.pi / 4e-6

        density = service.wigner(cat, np.array([0.0]), np.array([0.0, k_node, 2 * k_node]))

        assert density[0, 0] > 0.0
        assert density[0, 1] < 0.0
        assert density[0, 2] > 0.0

    def test_marginal_is_position_density(self, service, axes):
        """Test that integrating over k gives |psi|^2."""
        z, k = axes
        pair = GaussianPair(z_a=-1e-6, z_b=1.5e-6, k_a=1e6, k_b=-2e6, sigma=0.5e-6, relative_phase=0.7, weight_b=0.8)

        marginal = service.wigner(pair, z, k).sum(axis=1) * (k[1] - k[0])
        expected = np.abs(service.wavefunction(pair, z)) ** 2

        np.testing.assert_allclose(marginal, expected, atol=1e-6 * expected.max())

    def test_normalized(self, service, cat, axes):
        """Test that the density integrates to one."""
        z, k = axes

        total = service.wigner(cat, z, k).sum() * (z[1] - z[0]) * (k[1] - k[0])

        assert total == pytest.approx(1.0, rel=1e-6)

    def test_wavefunction_normalized(self, cat, axes):
        """Test that the superposition is normalized."""
        z, _ = axes

        psi = WignerService.wavefunction(cat, z)

        assert np.sum(np.abs(psi) ** 2) * (z[1] - z[0]) == pytest.approx(1.0, rel=1e-6)

    def test_grid_limit(self, service, cat):
        """Test that more than 4e6 cells raise GridTooLargeError."""
        with pytest.raises(GridTooLargeError):
            service.wigner(cat, np.zeros(2001), np.zeros(2001))


class TestExport:
    """Test cases for the configured grid and the CSV export."""

    def test_grid_from_config(self):
        """Test the grid axes in SI units."""
        z, k = WignerService.grid_from_config(WignerConfig(z_points=11, k_points=5))

        assert z[0] == pytest.approx(-5e-6)
        assert z[-1] == pytest.approx(5e-6)
        np.testing.assert_allclose(k, [-10e6, -5e6, 0.0, 5e6, 10e6])

    @pytest.mark.parametrize(
        "changes",
        [{"z_points": 1}, {"k_points": 1}, {"z_min_um": 5.0}, {"k_max_per_um": 0.0}],
    )
    def test_invalid_grid(self, changes):
        """Test that degenerate grids raise."""
        with pytest.raises(ValueError):
            WignerService.grid_from_config(WignerConfig(**changes))

    def test_export_csv(self, service, tmp_path):
        """Test one row per cell in micrometre units."""
        settings = WignerConfig(z_points=5, k_points=4)

        path = service.export_csv(settings, tmp_path / "wigner_density.csv", seed=1)

        lines = path.read_text().splitlines()
        assert lines[0] == "# seed: 1"
        assert lines[1] == ",".join(WIGNER_COLUMNS)
        assert len(lines) == 2 + 5 * 4
        assert lines[2].split(",")[:2] == ["-5", "-10"]
