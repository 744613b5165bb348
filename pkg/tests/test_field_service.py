"""Tests for FieldService."""

import numpy as np
import pytest

from sgisim.models import CONSTANTS, ChipGeometry, FieldModel
from sgisim.services.field_service import FieldService
from sgisim.utils.errors import NoRootError, SingularPositionError


@pytest.fixture
def service():
    return FieldService()


@pytest.fixture
def geometry():
    return ChipGeometry(current=0.86)


def _axis_gradient(geometry: ChipGeometry, z: float) -> float:
    """dB_y/dz on the axis below the center wire for the thin-wire model."""
    s = geometry.wire_spacing
    scale = CONSTANTS.mu0 * geometry.current / (2.0 * np.pi)
    return scale * (-1.0 / z**2 - 2.0 * (s**2 - z**2) / (s**2 + z**2) ** 2)


def _axis_curvature(geometry: ChipGeometry, z: float) -> float:
    s = geometry.wire_spacing
    scale = CONSTANTS.mu0 * geometry.current / (2.0 * np.pi)
    return scale * (2.0 / z**3 + 4.0 * z * (3.0 * s**2 - z**2) / (s**2 + z**2) ** 3)


class TestFieldVectors:
    """Test cases for the field evaluation."""

    def test_bias_only_without_current(self, service):
        """Test that zero current leaves the bias field."""
        geometry = ChipGeometry(current=0.0)

        field = service.field_vectors(geometry, [0.0, 0.0, 90e-6], FieldModel.ThinWire)

        np.testing.assert_allclose(field, [[0.0, geometry.bias_y, 0.0]])

    def test_vectorized_matches_single_points(self, service, geometry):
        """Test that an (n, 3) evaluation equals point-by-point evaluation."""
        points = np.array([[0.0, 0.0, 80e-6], [0.0, 5e-6, 90e-6], [1e-6, -3e-6, 110e-6]])

        batch = service.field_vectors(geometry, points, FieldModel.ThinWire)
        single = np.vstack([service.field_vectors(geometry, p, FieldModel.ThinWire) for p in points])

        np.testing.assert_allclose(batch, single, rtol=1e-12)

    def test_singular_position(self, service, geometry):
        """Test that a point on a filament raises."""
        with pytest.raises(SingularPositionError, match="filament"):
            service.field_at(geometry, [0.0, 0.0, 0.0], FieldModel.ThinWire)

    def test_thin_wire_potential_matches_field(self, service, geometry):
        """Test that the closed-form potential equals the Zeeman energy relative to the bias."""
        z = np.array([70e-6, 85e-6, 95e-6])
        magnitudes = np.array(
            [service.field_at(geometry, [0.0, 0.0, zi], FieldModel.ThinWire).b_magnitude for zi in z]
        )

        for mF in (1, 2):
            expected = service.zeeman_potential(mF, magnitudes) - service.zeeman_potential(mF, geometry.bias_y)
            np.testing.assert_allclose(service.thin_wire_potential(mF, z, geometry), expected, rtol=1e-9)

    def test_zeeman_potential_rejects_unknown_state(self, service):
        """Test that only mF = 1 and 2 are accepted."""
        with pytest.raises(ValueError, match="mF"):
            service.zeeman_potential(0, 1e-3)


class TestFieldDerivatives:
    """Test cases for gradients and curvatures."""

    def test_thin_wire_gradient_and_curvature(self, service, geometry):
        """Test the analytic derivatives on the axis against closed forms."""
        z = 87.5e-6

        sample = service.field_at(geometry, [0.0, 0.0, z], FieldModel.ThinWire)

        assert sample.gradient_z == pytest.approx(_axis_gradient(geometry, z), rel=1e-9)
        assert sample.curvature_z == pytest.approx(_axis_curvature(geometry, z), rel=1e-7)

    def test_stencil_agrees_with_analytic(self, service, geometry):
        """Test that the 7-point stencil reproduces the analytic derivatives."""
        position = [0.0, 0.0, 87.5e-6]

        sample = service.field_at(geometry, position, FieldModel.ThinWire)
        magnitude, gradient, curvature = service.magnitude_derivatives(geometry, position, FieldModel.ThinWire)

        assert magnitude == pytest.approx(sample.b_magnitude, rel=1e-12)
        assert gradient[2] == pytest.approx(sample.gradient_z, rel=1e-6)
        assert curvature[2] == pytest.approx(sample.curvature_z, rel=1e-3)
        np.testing.assert_allclose(service.curvature_tensor_diag(geometry, position, FieldModel.ThinWire), curvature)

    def test_force_points_toward_weaker_field(self, service, geometry):
        """Test that the force on a low-field seeker is -mF gF muB grad|B|."""
        position = [0.0, 0.0, 87.5e-6]
        _, gradient, _ = service.magnitude_derivatives(geometry, position, FieldModel.ThinWire)

        force = service.force(2, geometry, position, FieldModel.ThinWire)

        np.testing.assert_allclose(force, -CONSTANTS.mu_bohr * gradient, rtol=1e-12)
        assert force[2] > 0

    def test_stop_frequency_from_curvature(self, service, geometry):
        """Test the harmonic frequency derived from the curvature."""
        z = 87.5e-6
        expected = np.sqrt(2 * 0.5 * CONSTANTS.mu_bohr * _axis_curvature(geometry, z) / CONSTANTS.mass_rb87)

        omega = service.stop_frequency_from_field(geometry, [0.0, 0.0, z], FieldModel.ThinWire)

        assert omega == pytest.approx(expected, rel=1e-6)

    def test_stop_frequency_requires_convexity(self, service):
        """Test that a concave |B| is rejected."""
        geometry = ChipGeometry(current=0.86, bias_y=-36.7e-4)

        with pytest.raises(ValueError, match="not convex"):
            service.stop_frequency_from_field(geometry, [0.0, 0.0, 87.5e-6], FieldModel.ThinWire)


class TestQuadrupoleCenter:
    """Test cases for quadrupole_center."""

    def test_thin_wire_center_at_wire_spacing(self, service, geometry):
        """Test that the thin-wire zero sits at z = wire spacing."""
        center = service.quadrupole_center(geometry, FieldModel.ThinWire)

        assert center == pytest.approx(geometry.wire_spacing, rel=1e-6)

    def test_finite_wire_center_below_thin_wire(self, service, geometry):
        """Test that wide conductors move the zero slightly toward the chip."""
        center = service.quadrupole_center(geometry, FieldModel.FiniteWire)

        assert 94e-6 < center < geometry.wire_spacing

    def test_finite_wire_gradient_close_to_thin_wire(self, service, geometry):
        """Test that both models agree on the gradient at 90 um within 10%."""
        position = [0.0, 0.0, 90e-6]

        thin = service.field_at(geometry, position, FieldModel.ThinWire).gradient_z
        finite = service.field_at(geometry, position, FieldModel.FiniteWire).gradient_z

        assert finite == pytest.approx(thin, rel=0.1)

    def test_no_root_without_current(self, service):
        """Test that a current-free chip has no quadrupole."""
        with pytest.raises(NoRootError, match="sign change"):
            service.quadrupole_center(ChipGeometry(current=0.0), FieldModel.ThinWire)
