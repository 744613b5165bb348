"""
Service for semiclassical wavepacket propagation.
Velocity-Verlet center motion, scale-factor dynamics, action phase and
overlap visibility of two spin branches.
"""

import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..models.constants import CONSTANTS, PhysicalConstants
from ..models.fringe import VisibilityEstimate, VisibilityMethod
from ..models.geometry import ChipGeometry, FieldModel
from ..models.sequence import FullLoopSequence
from ..models.wavepacket import (
    TRAJECTORY_COLUMNS,
    FullLoopOutcome,
    OverlapInputs,
    ScaleMode,
    WavepacketState,
)
from ..utils.errors import InstabilityError
from .field_service import FieldService
from .landscapes import ChipLandscape, MagneticLandscape, PulseSchedule
from .output_service import write_csv

logger = logging.getLogger(__name__)

SCALE_BOUNDS = (1e-4, 1e4)
PULSE_DT = 1e-8
DELAY_DT = 1e-6

Recorder = Callable[[float, WavepacketState], None]


def _branch_width(sigma: float, scale: float, rate: float, constants: PhysicalConstants) -> Tuple[float, float]:
    """Width and chirp ξ = m·λ̇/(ħ·λ) of a Gaussian scaled by λ."""
    return sigma * scale, constants.mass_rb87 * rate / (constants.hbar * scale)


def gaussian_overlap(
    delta_z: float,
    delta_p: float,
    sigma_a: float,
    sigma_b: float,
    chirp_a: float,
    chirp_b: float,
    hbar: float = CONSTANTS.hbar,
) -> float:
    """
    |⟨ψa|ψb⟩| of two normalized chirped Gaussians.

    ψ ∝ exp[−(z − z_c)²/4σ² + iξ(z − z_c)²/2 + iP(z − z_c)/ħ]; ψb sits Δz
    and ΔP away from ψa.
    """
    a_a = 1.0 / (4.0 * sigma_a**2) - 0.5j * chirp_a
    a_b = 1.0 / (4.0 * sigma_b**2) - 0.5j * chirp_b
    k = delta_p / hbar
    big_a = np.conj(a_a) + a_b
    big_b = 2.0 * a_b * delta_z + 1j * k
    big_c = -a_b * delta_z**2 - 1j * k * delta_z
    norm = (2.0 * np.pi * sigma_a**2) ** -0.25 * (2.0 * np.pi * sigma_b**2) ** -0.25
    exponent = (big_b**2 / (4.0 * big_a) + big_c).real
    value = norm * math.sqrt(math.pi / abs(big_a)) * math.exp(exponent)
    return float(min(max(value, 0.0), 1.0))


class DynamicsService:
    """Service class for semiclassical propagation of spin branches."""

    def __init__(
        self,
        constants: PhysicalConstants = CONSTANTS,
        field_service: Optional[FieldService] = None,
        gravity: bool = True,
    ):
        self.constants = constants
        self.field_service = field_service or FieldService(constants)
        self.gravity = gravity

    @property
    def mass(self) -> float:
        return self.constants.mass_rb87

    @property
    def _gravity_vector(self) -> np.ndarray:
        g = self.constants.g_gravity if self.gravity else 0.0
        return np.array([0.0, 0.0, g])

    def _moment(self, mF: int) -> float:
        return mF * self.constants.lande_gF * self.constants.mu_bohr

    def _evaluate(
        self, state: WavepacketState, landscape: MagneticLandscape, t: float
    ) -> Tuple[np.ndarray, np.ndarray, float]:
        """Force, harmonic ω_j² and minus the potential energy at the branch center."""
        b, gradient, curvature = landscape.sample(state.position, t)
        moment = self._moment(state.spin_mF)
        gravity = self._gravity_vector
        force = -moment * gradient + self.mass * gravity
        omega_sq = moment * curvature / self.mass
        magnetic = moment * (b - landscape.reference_field)
        return force, omega_sq, self.mass * float(gravity @ state.position) - magnetic

    def _kinetic(self, momentum: np.ndarray) -> float:
        return float(momentum @ momentum) / (2.0 * self.mass)

    def _scale_acceleration(
        self, state: WavepacketState, scale: np.ndarray, omega_sq: np.ndarray, mode: ScaleMode
    ) -> np.ndarray:
        if mode is ScaleMode.ThomasFermi:
            if state.trap_omega0 is None:
                raise ValueError("Thomas-Fermi scaling needs the initial trap frequencies")
            return state.trap_omega0**2 / (scale * np.prod(scale)) - omega_sq * scale
        kinetic = (self.constants.hbar / (2.0 * self.mass * state.sigma0**2)) ** 2
        return kinetic / scale**3 - omega_sq * scale

    def scale_dynamics(
        self,
        state: WavepacketState,
        omega_sq: np.ndarray,
        mode: ScaleMode,
        dt: float,
        omega_sq_end: Optional[np.ndarray] = None,
    ) -> WavepacketState:
        """
        Advance the scale factors by one RK4 step.

        ThomasFermi integrates λ̈_j = ω_j(0)²/(λ_j·λxλyλz) − ω_j(t)²λ_j, Gaussian
        integrates λ̈_j = (ħ/2mσ0j²)²/λ_j³ − ω_j(t)²λ_j. ω² is interpolated
        linearly to omega_sq_end across the step.

        Raises:
            InstabilityError: If a scale factor leaves (1e-4, 1e4)
        """
        omega_sq = np.asarray(omega_sq, dtype=float)
        end = omega_sq if omega_sq_end is None else np.asarray(omega_sq_end, dtype=float)
        middle = 0.5 * (omega_sq + end)

        def derivative(scale, rate, w_sq):
            return rate, self._scale_acceleration(state, scale, w_sq, mode)

        lam, rate = state.scale, state.scale_rate
        k1 = derivative(lam, rate, omega_sq)
        k2 = derivative(lam + 0.5 * dt * k1[0], rate + 0.5 * dt * k1[1], middle)
        k3 = derivative(lam + 0.5 * dt * k2[0], rate + 0.5 * dt * k2[1], middle)
        k4 = derivative(lam + dt * k3[0], rate + dt * k3[1], end)

        state.scale = lam + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        state.scale_rate = rate + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])

        low, high = SCALE_BOUNDS
        if np.any(state.scale <= low) or np.any(state.scale >= high) or not np.all(np.isfinite(state.scale)):
            logger.error(f"Scale factors left ({low}, {high}): {state.scale}")
            raise InstabilityError(f"Scale factors {state.scale} outside ({low}, {high})")
        return state

    def propagate(
        self,
        state: WavepacketState,
        landscape: MagneticLandscape,
        dt: float,
        duration: float,
        t0: float = 0.0,
        mode: ScaleMode = ScaleMode.Gaussian,
        recorder: Optional[Recorder] = None,
    ) -> WavepacketState:
        """
        Propagate one branch through a landscape.

        Args:
            state: Branch at time t0 (not modified)
            landscape: Magnetic landscape
            dt: Nominal time step in s; shortened so the duration is covered exactly
            duration: Propagation time in s
            t0: Start time in s, used for the landscape's pulse schedule
            mode: Scale-factor model
            recorder: Called with (t, state) after every step

        Returns:
            Branch at t0 + duration

        Raises:
            InstabilityError: If a scale factor leaves (1e-4, 1e4)
        """
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if duration < 0:
            raise ValueError(f"Duration must be non-negative, got {duration}")

        current = state.copy()
        if duration == 0:
            return current
        steps = max(int(math.ceil(duration / dt - 1e-9)), 1)
        step = duration / steps
        hbar = self.constants.hbar

        # Gates are sampled inside the interval; a pulse ending at t0 + duration is still on for its last half-step
        t_last = t0 + duration - 0.5 * step
        force, omega_sq, potential = self._evaluate(current, landscape, t0)
        lagrangian = self._kinetic(current.momentum) + potential
        for n in range(steps):
            t = t0 + n * step
            half_momentum = current.momentum + 0.5 * step * force
            current.position = current.position + step * half_momentum / self.mass
            force_end, omega_sq_end, potential_end = self._evaluate(current, landscape, min(t + step, t_last))
            current.momentum = half_momentum + 0.5 * step * force_end
            lagrangian_end = self._kinetic(current.momentum) + potential_end

            self.scale_dynamics(current, omega_sq, mode, step, omega_sq_end)
            current.phase += 0.5 * (lagrangian + lagrangian_end) * step / hbar

            force, omega_sq, lagrangian = force_end, omega_sq_end, lagrangian_end
            if recorder is not None:
                recorder(t + step, current)
        return current

    def energy(self, state: WavepacketState, landscape: MagneticLandscape, t: float = 0.0) -> float:
        """Center-of-mass energy P²/2m + V_m − m·g·z."""
        b, _, _ = landscape.sample(state.position, t)
        kinetic = float(state.momentum @ state.momentum) / (2.0 * self.mass)
        magnetic = self._moment(state.spin_mF) * (b - landscape.reference_field)
        return kinetic + magnetic - self.mass * float(self._gravity_vector @ state.position)

    def overlap_general(self, inputs: OverlapInputs) -> float:
        """
        Overlap visibility of two Gaussian branches with scale factors and chirps.

        Widths are sigma_z·λ_j when sigma_z is given, otherwise sigma·λ_j/sqrt(λ1λ2).
        Each branch's chirp is chirp_xi plus m·λ̇_j/(ħλ_j).
        """
        lam_a, lam_b = inputs.scales
        base = inputs.sigma_z if inputs.sigma_z is not None else inputs.sigma / math.sqrt(lam_a * lam_b)
        sigma_a, chirp_a = _branch_width(base, lam_a, inputs.rates[0], self.constants)
        sigma_b, chirp_b = _branch_width(base, lam_b, inputs.rates[1], self.constants)
        return gaussian_overlap(
            inputs.delta_z,
            inputs.delta_p,
            sigma_a,
            sigma_b,
            chirp_a + inputs.chirp_xi,
            chirp_b + inputs.chirp_xi,
            self.constants.hbar,
        )

    def overlap_projected(self, sigma: float, chirp_xi: float, delta_z: float, delta_p: float) -> float:
        """
        Overlap of two equal chirped Gaussians, projected to their common waist.

        σ0 = σ/sqrt(1 + 4ξ²σ⁴), t = (4m/ħ)σ⁴ξ/(1 + 4σ⁴ξ²), Δz0 = Δz − tΔP/m and
        V = exp(−σ0²ΔP²/2ħ²)·exp(−Δz0²/8σ0²).
        """
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        hbar, mass = self.constants.hbar, self.mass
        factor = 1.0 + 4.0 * chirp_xi**2 * sigma**4
        sigma0 = sigma / math.sqrt(factor)
        t_waist = 4.0 * mass / hbar * sigma**4 * chirp_xi / factor
        delta_z0 = delta_z - t_waist * delta_p / mass
        return float(
            math.exp(-(sigma0**2) * delta_p**2 / (2.0 * hbar**2)) * math.exp(-(delta_z0**2) / (8.0 * sigma0**2))
        )

    def branch_overlap(self, branch_a: WavepacketState, branch_b: WavepacketState) -> float:
        """Product of the per-axis Gaussian overlaps of two branches."""
        value = 1.0
        for axis in range(3):
            sigma_a, chirp_a = _branch_width(
                branch_a.sigma0[axis], branch_a.scale[axis], branch_a.scale_rate[axis], self.constants
            )
            sigma_b, chirp_b = _branch_width(
                branch_b.sigma0[axis], branch_b.scale[axis], branch_b.scale_rate[axis], self.constants
            )
            value *= gaussian_overlap(
                branch_b.position[axis] - branch_a.position[axis],
                branch_b.momentum[axis] - branch_a.momentum[axis],
                sigma_a,
                sigma_b,
                chirp_a,
                chirp_b,
                self.constants.hbar,
            )
        return value

    def phase_difference(self, branch_a: WavepacketState, branch_b: WavepacketState) -> float:
        """Interferometer phase φb − φa − P̄·Δz/ħ taken at the midpoint of the two centers."""
        delta_z = branch_b.position[2] - branch_a.position[2]
        mean_p = 0.5 * (branch_a.momentum[2] + branch_b.momentum[2])
        return float(branch_b.phase - branch_a.phase - mean_p * delta_z / self.constants.hbar)

    def simulate_full_loop(
        self,
        seq: FullLoopSequence,
        geometry: Optional[ChipGeometry] = None,
        model: FieldModel = FieldModel.ThinWire,
        landscape: Optional[MagneticLandscape] = None,
        landscape_factory: Optional[Callable[[FullLoopSequence], MagneticLandscape]] = None,
        sigma0: Sequence[float] = (1.2e-6, 1.2e-6, 1.2e-6),
        trap_omega0: Optional[Sequence[float]] = None,
        mode: ScaleMode = ScaleMode.Gaussian,
        pulse_dt: float = PULSE_DT,
        delay_dt: float = DELAY_DT,
        record: bool = False,
        z0_shift: float = 0.0,
    ) -> FullLoopOutcome:
        """
        Propagate both spin branches through a full-loop sequence and time of flight.

        Branch a starts in mF = 2 and branch b in mF = 1. Spin flips of the
        scheme and of the echo pulses swap the labels at their instants.

        Args:
            seq: Full-loop sequence; time zero is the release at the start of T_d0
            geometry: Chip geometry, required unless a landscape is given
            model: Field model for the chip landscape
            landscape: Overrides the chip landscape built from the sequence
            landscape_factory: Builds the landscape from the sequence when no landscape is given
            sigma0: Initial Gaussian-equivalent widths in m
            trap_omega0: In-trap angular frequencies, required for ThomasFermi
            mode: Scale-factor model
            pulse_dt: Step during gradient pulses
            delay_dt: Step during delays and time of flight
            record: Keep a trajectory row per step
            z0_shift: Offset added to the initial height

        Returns:
            FullLoopOutcome at the end of the time of flight
        """
        segments = list(seq.segments())
        if landscape is None and landscape_factory is not None:
            landscape = landscape_factory(seq)
        if landscape is None:
            if geometry is None:
                raise ValueError("Either a geometry or a landscape is required")
            landscape = ChipLandscape(
                geometry.with_current(seq.current),
                model,
                PulseSchedule.from_segments(segments),
                self.field_service,
            )
        segments.append(("TOF", seq.TOF, 0.0))

        start = WavepacketState(
            position=[0.0, 0.0, seq.z0_trap + z0_shift],
            sigma0=sigma0,
            trap_omega0=trap_omega0,
        )
        branch_a = start.copy(spin_mF=2)
        branch_b = start.copy(spin_mF=1)

        end_time = sum(duration for _, duration, _ in segments)
        flips = [t for t in seq.spin_flip_times() if 0.0 < t < end_time]
        boundaries = [0.0]
        for _, duration, _ in segments:
            boundaries.append(boundaries[-1] + duration)
        breakpoints = sorted(set(boundaries) | set(flips))

        columns: List[np.ndarray] = []
        track_a: List[Tuple[float, float, float, float, float]] = []
        track_b: List[Tuple[float, float, float, float, float]] = []

        def recorder_for(track):
            def record_step(t: float, state: WavepacketState) -> None:
                track.append((t, state.position[2], state.momentum[2], state.scale[2], state.phase))

            return record_step

        record_a, record_b = recorder_for(track_a), recorder_for(track_b)
        record_a(0.0, branch_a)
        record_b(0.0, branch_b)
        for t_start, t_end in zip(breakpoints[:-1], breakpoints[1:]):
            if any(abs(t_start - flip) < 1e-15 for flip in flips):
                branch_a.spin_mF, branch_b.spin_mF = 3 - branch_a.spin_mF, 3 - branch_b.spin_mF
                logger.debug(f"Spin flip at {t_start * 1e6:.3f} us")
            duration = t_end - t_start
            if duration <= 0:
                continue
            dt = pulse_dt if landscape.is_active(0.5 * (t_start + t_end)) else delay_dt
            branch_a = self.propagate(branch_a, landscape, dt, duration, t_start, mode, record_a)
            branch_b = self.propagate(branch_b, landscape, dt, duration, t_start, mode, record_b)

        a = np.array(track_a)
        b = np.array(track_b)
        dz = b[:, 1] - a[:, 1]
        dp = b[:, 2] - a[:, 2]
        if record:
            phase_diff = b[:, 4] - a[:, 4] - 0.5 * (a[:, 2] + b[:, 2]) * dz / self.constants.hbar
            columns = [a[:, 0], a[:, 1], b[:, 1], a[:, 2], b[:, 2], a[:, 3], b[:, 3], phase_diff]

        visibility = self.branch_overlap(branch_a, branch_b)
        outcome = FullLoopOutcome(
            branch_a=branch_a,
            branch_b=branch_b,
            delta_z=float(branch_b.position[2] - branch_a.position[2]),
            delta_p=float(branch_b.momentum[2] - branch_a.momentum[2]),
            max_separation=float(np.max(np.abs(dz))),
            max_momentum_difference=float(np.max(np.abs(dp))),
            phase_difference=self.phase_difference(branch_a, branch_b),
            visibility=visibility,
            trajectory=np.column_stack(columns) if record else None,
        )
        logger.debug(
            f"Full loop {seq.label or seq.scheme}: V={visibility:.6f}, "
            f"dz={outcome.delta_z * 1e9:.3f} nm, max dz={outcome.max_separation * 1e6:.4f} um"
        )
        return outcome

    def run_full_loop(
        self,
        seq: FullLoopSequence,
        geometry: Optional[ChipGeometry] = None,
        model: FieldModel = FieldModel.ThinWire,
        with_uncertainty: bool = False,
        **kwargs,
    ) -> VisibilityEstimate:
        """
        Overlap visibility of a full-loop sequence.

        With with_uncertainty the sequence is rerun at z0 ± z0_uncertainty and
        the larger deviation is reported as the uncertainty.
        """
        value = self.simulate_full_loop(seq, geometry, model, **kwargs).visibility
        uncertainty = 0.0
        if with_uncertainty and seq.z0_uncertainty > 0:
            shifted = [
                self.simulate_full_loop(seq, geometry, model, z0_shift=shift, **kwargs).visibility
                for shift in (-seq.z0_uncertainty, seq.z0_uncertainty)
            ]
            uncertainty = max(abs(v - value) for v in shifted)
        return VisibilityEstimate(value=value, uncertainty=uncertainty, method=str(VisibilityMethod.Overlap))

    @staticmethod
    def trajectory_csv(outcome: FullLoopOutcome, path: Path, **metadata) -> Path:
        """Write the recorded trajectory with the columns t, z1, z2, p1, p2, λz1, λz2, Δφ."""
        if outcome.trajectory is None:
            raise ValueError("Outcome carries no trajectory; simulate with record=True")
        hbar = CONSTANTS.hbar
        rows = (
            (t * 1e6, z1 * 1e6, z2 * 1e6, p1 / hbar * 1e-6, p2 / hbar * 1e-6, l1, l2, phi)
            for t, z1, z2, p1, p2, l1, l2, phi in outcome.trajectory
        )
        return write_csv(path, TRAJECTORY_COLUMNS, rows, metadata)
