"""
Service for the atom-chip magnetic field.
Evaluates the three-wire quadrupole plus bias in the thin-wire and
finite-wire models, and derives potentials, forces and curvatures.
"""

import logging
from typing import Tuple

import numpy as np
from scipy.optimize import bisect

from ..models.constants import CONSTANTS, PhysicalConstants
from ..models.geometry import ChipGeometry, FieldModel, FieldSample
from ..utils.errors import NoRootError, SingularPositionError

logger = logging.getLogger(__name__)

SINGULAR_DISTANCE = 1e-9
STENCIL_STEP = 1e-8
QUADRUPOLE_BRACKET = (10e-6, 300e-6)
WIDTH_NODES = 32
THICKNESS_NODES = 8


class FieldService:
    """Service class for chip field evaluation."""

    def __init__(self, constants: PhysicalConstants = CONSTANTS):
        self.constants = constants
        u, wu = np.polynomial.legendre.leggauss(WIDTH_NODES)
        v, wv = np.polynomial.legendre.leggauss(THICKNESS_NODES)
        # Nodes on [-1, 1] with weights normalized to unit sum per axis
        self._width_nodes = u
        self._thickness_nodes = v
        self._node_weights = np.outer(wu, wv).ravel() / 4.0

    def _check_singular(self, geometry: ChipGeometry, points: np.ndarray) -> None:
        dy = points[:, 1, None] - geometry.wire_offsets[None, :]
        distance = np.sqrt(dy**2 + points[:, 2, None] ** 2)
        if np.any(distance < SINGULAR_DISTANCE):
            closest = points[np.argmin(distance.min(axis=1))]
            logger.error(f"Field requested on a wire filament at {closest}")
            raise SingularPositionError(
                f"Position {closest} is within {SINGULAR_DISTANCE} m of a wire filament"
            )

    def _thin_wire_chip(self, geometry: ChipGeometry, points: np.ndarray) -> np.ndarray:
        dy = points[:, 1, None] - geometry.wire_offsets[None, :]
        dz = points[:, 2, None] * np.ones_like(dy)
        rho_sq = dy**2 + dz**2
        prefactor = self.constants.mu0 * geometry.current * geometry.wire_signs / (2.0 * np.pi)
        field = np.zeros_like(points)
        field[:, 1] = np.sum(-prefactor * dz / rho_sq, axis=1)
        field[:, 2] = np.sum(prefactor * dy / rho_sq, axis=1)
        return field

    def _finite_wire_chip(self, geometry: ChipGeometry, points: np.ndarray) -> np.ndarray:
        half_length = 0.5 * geometry.wire_length
        y_nodes = (
            geometry.wire_offsets[:, None]
            + 0.5 * geometry.wire_width * self._width_nodes[None, :]
        )
        # Conductor cross section centered on the z = 0 filament plane
        z_nodes = 0.5 * geometry.wire_thickness * self._thickness_nodes
        y_fil = np.repeat(y_nodes[:, :, None], THICKNESS_NODES, axis=2).reshape(3, -1)
        z_fil = np.broadcast_to(z_nodes, (3, WIDTH_NODES, THICKNESS_NODES)).reshape(3, -1)
        currents = (
            geometry.current * geometry.wire_signs[:, None] * self._node_weights[None, :]
        ).ravel()
        y_fil = y_fil.ravel()
        z_fil = z_fil.ravel()

        # Straight segment from x = -L/2 to x = +L/2 for every sub-filament
        r1 = np.stack(
            [
                np.broadcast_to(-half_length - points[:, 0, None], (len(points), y_fil.size)),
                y_fil[None, :] - points[:, 1, None],
                z_fil[None, :] - points[:, 2, None],
            ],
            axis=-1,
        )
        r2 = r1.copy()
        r2[..., 0] = half_length - points[:, 0, None]
        r1_len = np.linalg.norm(r1, axis=-1)
        r2_len = np.linalg.norm(r2, axis=-1)
        cross = np.cross(r1, r2)
        dot = np.sum(r1 * r2, axis=-1)
        factor = (r1_len + r2_len) / (r1_len * r2_len * (r1_len * r2_len + dot))
        contributions = cross * (factor * currents[None, :])[..., None]
        return self.constants.mu0 / (4.0 * np.pi) * contributions.sum(axis=1)

    def chip_field_vectors(
        self, geometry: ChipGeometry, points: np.ndarray, model: FieldModel
    ) -> np.ndarray:
        """Chip-only field at an (n, 3) array of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_singular(geometry, points)
        if geometry.current == 0:
            return np.zeros_like(points)
        if model is FieldModel.ThinWire:
            return self._thin_wire_chip(geometry, points)
        return self._finite_wire_chip(geometry, points)

    def field_vectors(
        self, geometry: ChipGeometry, points: np.ndarray, model: FieldModel
    ) -> np.ndarray:
        """
        Total field (chip + bias) at an (n, 3) array of points.

        Args:
            geometry: Chip geometry and current
            points: Positions in m, shape (n, 3) or (3,)
            model: ThinWire or FiniteWire

        Returns:
            Field vectors in T, shape (n, 3)

        Raises:
            SingularPositionError: If a point lies on a wire filament
        """
        field = self.chip_field_vectors(geometry, points, model)
        field[:, 1] += geometry.bias_y
        return field

    def _magnitude_stencil(
        self, geometry: ChipGeometry, position: np.ndarray, model: FieldModel
    ) -> Tuple[float, np.ndarray, np.ndarray]:
        """|B| at the center and at ±h along each axis."""
        position = np.asarray(position, dtype=float).reshape(3)
        offsets = np.vstack([np.zeros(3), STENCIL_STEP * np.eye(3), -STENCIL_STEP * np.eye(3)])
        magnitudes = np.linalg.norm(
            self.field_vectors(geometry, position[None, :] + offsets, model), axis=1
        )
        return float(magnitudes[0]), magnitudes[1:4], magnitudes[4:7]

    def _thin_wire_z_derivatives(
        self, geometry: ChipGeometry, position: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        dy = position[1] - geometry.wire_offsets
        dz = position[2] * np.ones(3)
        rho_sq = dy**2 + dz**2
        prefactor = self.constants.mu0 * geometry.current * geometry.wire_signs / (2.0 * np.pi)
        first = np.zeros(3)
        second = np.zeros(3)
        first[1] = np.sum(-prefactor * (dy**2 - dz**2) / rho_sq**2)
        first[2] = np.sum(prefactor * (-2.0 * dy * dz) / rho_sq**2)
        second[1] = np.sum(-prefactor * dz * (2.0 * dz**2 - 6.0 * dy**2) / rho_sq**3)
        second[2] = np.sum(prefactor * (-2.0 * dy) * (dy**2 - 3.0 * dz**2) / rho_sq**3)
        return first, second

    def field_at(
        self, geometry: ChipGeometry, position: np.ndarray, model: FieldModel
    ) -> FieldSample:
        """
        Evaluate field, z-gradient and z-curvature of |B| at one point.

        The thin-wire model differentiates analytically, the finite-wire
        model uses central differences with a 10 nm step.

        Args:
            geometry: Chip geometry and current
            position: 3-vector in m
            model: ThinWire or FiniteWire

        Returns:
            FieldSample with total field (chip + bias)

        Raises:
            SingularPositionError: If the point lies on a wire filament
        """
        position = np.asarray(position, dtype=float).reshape(3)
        b_vector = self.field_vectors(geometry, position, model)[0]
        b_magnitude = float(np.linalg.norm(b_vector))

        if model is FieldModel.ThinWire and b_magnitude > 0:
            first, second = self._thin_wire_z_derivatives(geometry, position)
            gradient = float(b_vector @ first) / b_magnitude
            curvature = float(first @ first + b_vector @ second) / b_magnitude - gradient**2 / b_magnitude
        else:
            center, plus, minus = self._magnitude_stencil(geometry, position, model)
            gradient = float(plus[2] - minus[2]) / (2.0 * STENCIL_STEP)
            curvature = float(plus[2] - 2.0 * center + minus[2]) / STENCIL_STEP**2

        return FieldSample(
            b_vector=b_vector,
            b_magnitude=b_magnitude,
            gradient_z=gradient,
            curvature_z=curvature,
        )

    def magnitude_derivatives(
        self, geometry: ChipGeometry, position: np.ndarray, model: FieldModel
    ) -> Tuple[float, np.ndarray, np.ndarray]:
        """|B|, its gradient and the diagonal of its Hessian from one 7-point stencil."""
        center, plus, minus = self._magnitude_stencil(geometry, position, model)
        gradient = (plus - minus) / (2.0 * STENCIL_STEP)
        curvature = (plus - 2.0 * center + minus) / STENCIL_STEP**2
        return center, gradient, curvature

    def zeeman_potential(self, mF: int, b_magnitude):
        """Zeeman energy mF·gF·μB·|B| in J (scalar or array)."""
        if mF not in (1, 2):
            raise ValueError(f"mF must be 1 or 2, got {mF}")
        return mF * self.constants.lande_gF * self.constants.mu_bohr * b_magnitude

    def thin_wire_potential(self, mF: int, z, geometry: ChipGeometry):
        """
        Closed-form chip-only potential on the axis below the center wire.

        V = (α/z)(1 − 2/(1 + (z_w/z)²)) with α = mF gF μB μ0 I / 2π.
        """
        alpha = (
            mF
            * self.constants.lande_gF
            * self.constants.mu_bohr
            * self.constants.mu0
            * geometry.current
            / (2.0 * np.pi)
        )
        z = np.asarray(z, dtype=float)
        return alpha / z * (1.0 - 2.0 / (1.0 + (geometry.wire_spacing / z) ** 2))

    def force(
        self, mF: int, geometry: ChipGeometry, position: np.ndarray, model: FieldModel
    ) -> np.ndarray:
        """Magnetic force −mF gF μB ∇|B| in N by central differences."""
        _, plus, minus = self._magnitude_stencil(geometry, position, model)
        gradient = (plus - minus) / (2.0 * STENCIL_STEP)
        return -self.zeeman_potential(mF, 1.0) * gradient

    def curvature_tensor_diag(
        self, geometry: ChipGeometry, position: np.ndarray, model: FieldModel
    ) -> np.ndarray:
        """Diagonal second derivatives ∂²|B|/∂x_j² in T/m²."""
        center, plus, minus = self._magnitude_stencil(geometry, position, model)
        return (plus - 2.0 * center + minus) / STENCIL_STEP**2

    def stop_frequency_from_field(
        self, geometry: ChipGeometry, position: np.ndarray, model: FieldModel, mF: int = 2
    ) -> float:
        """
        Harmonic frequency sqrt(mF gF μB ∂²|B|/∂z² / m) at a position.

        Raises:
            ValueError: If |B| is not convex along z at the position
        """
        curvature = self.field_at(geometry, position, model).curvature_z
        if curvature <= 0:
            raise ValueError(
                f"|B| is not convex along z at {position} (curvature {curvature:.4g} T/m^2)"
            )
        return float(
            np.sqrt(self.zeeman_potential(mF, curvature) / self.constants.mass_rb87)
        )

    def quadrupole_center(self, geometry: ChipGeometry, model: FieldModel) -> float:
        """
        Height of the chip-field zero below the center wire.

        Args:
            geometry: Chip geometry and current
            model: ThinWire or FiniteWire

        Returns:
            z of the quadrupole center in m

        Raises:
            NoRootError: If the chip field has no sign change in [10, 300] μm
        """

        def along_axis(z: float) -> float:
            point = np.array([[0.0, 0.0, z]])
            return float(self.chip_field_vectors(geometry, point, model)[0, 1])

        low, high = QUADRUPOLE_BRACKET
        f_low, f_high = along_axis(low), along_axis(high)
        if f_low * f_high >= 0:
            logger.error(
                f"No quadrupole center in [{low * 1e6:.0f}, {high * 1e6:.0f}] um "
                f"for current {geometry.current} A"
            )
            raise NoRootError(
                f"Chip field has no sign change between {low} m and {high} m"
            )

        z_center = bisect(along_axis, low, high, xtol=1e-12, maxiter=200)
        logger.debug(f"Quadrupole center ({model}): {z_center * 1e6:.4f} um")
        return float(z_center)
