"""
Service for the one-dimensional quantum model of the splitting pulse.
Crank-Nicolson evolution of both spin components under the chip potential
with the random-vector perturbation, and ensembles over perturbations.
"""

import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve_banded

from ..models.constants import CONSTANTS, PhysicalConstants
from ..models.fringe import (
    DecayFit,
    EnsembleResult,
    FringePattern,
    VisibilityEstimate,
    VisibilityMethod,
)
from ..models.geometry import ChipGeometry
from ..models.noise import Correlation, NoiseRealization
from ..models.wavefunction import Grid1D, WaveFunction
from ..utils.errors import (
    DegeneratePeriodError,
    GridMismatchError,
    InsufficientDataError,
    NonConvergenceError,
)
from ..utils.random_streams import shot_generator
from ..workers.shot_pool import run_shot_workers
from .field_service import FieldService
from .fringe_service import FringeService
from .noise_service import NoiseService
from .output_service import write_csv

logger = logging.getLogger(__name__)

EDGE_TOLERANCE = 1e-6
DEFAULT_DT = 1e-8
SPIN_STATES = (1, 2)

Potential = Union[np.ndarray, Callable[[int], np.ndarray]]


class QuantumService:
    """Service class for Crank-Nicolson wavefunction evolution."""

    def __init__(
        self,
        constants: PhysicalConstants = CONSTANTS,
        field_service: Optional[FieldService] = None,
        fringe_service: Optional[FringeService] = None,
    ):
        self.constants = constants
        self.field_service = field_service or FieldService(constants)
        self.fringe_service = fringe_service or FringeService()

    @staticmethod
    def gaussian_wavefunction(grid: Grid1D, center: float, sigma: float, k0: float = 0.0) -> WaveFunction:
        """Normalized Gaussian with position width sigma (|ψ|² has std sigma)."""
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if not grid.covers(center, sigma):
            logger.warning(f"Grid does not cover ±5σ around {center * 1e6:.3f} um")
        z = grid.z
        amplitudes = np.exp(-((z - center) ** 2) / (4.0 * sigma**2) + 1j * k0 * z)
        psi = WaveFunction(grid, amplitudes)
        psi.amplitudes /= np.sqrt(psi.norm())
        return psi

    def _banded_system(self, potential: np.ndarray, dz: float, dt: float) -> Tuple[np.ndarray, np.ndarray, float]:
        hbar, mass = self.constants.hbar, self.constants.mass_rb87
        off = -(hbar**2) / (2.0 * mass * dz**2)
        diagonal = hbar**2 / (mass * dz**2) + potential
        factor = 0.5j * dt / hbar

        ab = np.empty((3, potential.size), dtype=complex)
        ab[0, 1:] = factor * off
        ab[0, 0] = 0.0
        ab[1] = 1.0 + factor * diagonal
        ab[2, :-1] = factor * off
        ab[2, -1] = 0.0
        return ab, diagonal, off

    @staticmethod
    def _apply_explicit(psi: np.ndarray, diagonal: np.ndarray, off: float, factor: complex) -> np.ndarray:
        h_psi = diagonal * psi
        h_psi[1:] += off * psi[:-1]
        h_psi[:-1] += off * psi[1:]
        return psi - factor * h_psi

    def evolve(self, psi: WaveFunction, potential: Potential, dt: float, steps: int) -> WaveFunction:
        """
        Crank-Nicolson evolution (I + iHdt/2ħ)ψ' = (I − iHdt/2ħ)ψ with ψ = 0 outside the grid.

        Args:
            psi: Initial wavefunction
            potential: Potential in J on psi's grid, or a callable giving it per step
            dt: Time step in s; a negative step runs backwards in time
            steps: Number of steps

        Returns:
            Evolved wavefunction; the input is left unchanged

        Raises:
            GridMismatchError: If the potential is not sampled on psi's grid
        """
        if dt == 0:
            raise ValueError("dt must be nonzero")
        if steps < 0:
            raise ValueError(f"steps must be non-negative, got {steps}")

        grid = psi.grid
        amplitudes = psi.amplitudes.copy()
        factor = 0.5j * dt / self.constants.hbar

        def sampled(step: int) -> np.ndarray:
            values = np.asarray(potential(step) if callable(potential) else potential, dtype=float)
            if values.shape != (grid.n_points,):
                logger.error(f"Potential of shape {values.shape} on grid of {grid.n_points} points")
                raise GridMismatchError(f"Potential has shape {values.shape}, grid has {grid.n_points} points")
            return values

        static = not callable(potential)
        if static:
            ab, diagonal, off = self._banded_system(sampled(0), grid.dz, dt)

        for step in range(steps):
            if not static:
                ab, diagonal, off = self._banded_system(sampled(step), grid.dz, dt)
            rhs = self._apply_explicit(amplitudes, diagonal, off, factor)
            amplitudes = solve_banded((1, 1), ab, rhs, check_finite=False)

        evolved = WaveFunction(grid, amplitudes)
        self._check_edges(evolved)
        return evolved

    @staticmethod
    def _check_edges(psi: WaveFunction) -> None:
        magnitude = np.abs(psi.amplitudes)
        peak = magnitude.max()
        if peak > 0 and max(magnitude[0], magnitude[-1]) > EDGE_TOLERANCE * peak:
            logger.warning(
                f"Wavefunction reaches the grid edge ({max(magnitude[0], magnitude[-1]) / peak:.2e} of peak)"
            )

    @staticmethod
    def noise_realization(
        n_points: int,
        epsilon: float,
        correlation: Correlation,
        seed: int,
        shot: int = 0,
        spin_index: int = 0,
    ) -> NoiseRealization:
        """
        Draw the random diagonal of one shot for one spin component.

        Zero correlation draws every grid point independently and each spin
        gets its own stream. Infinite correlation draws one number per shot,
        shared by both spins.
        """
        if correlation is Correlation.Zero:
            rng = shot_generator(seed, shot, stream=spin_index)
            values = rng.uniform(-1.0, 1.0, n_points)
        else:
            rng = shot_generator(seed, shot, stream=0)
            values = np.full(n_points, rng.uniform(-1.0, 1.0))
        return NoiseRealization(epsilon=epsilon, correlation=correlation, seed=seed, values=values)

    @staticmethod
    def perturbed_potential(base: np.ndarray, noise: NoiseRealization) -> np.ndarray:
        """V + ε·(values ⊙ V) pointwise."""
        base = np.asarray(base, dtype=float)
        if base.shape != noise.values.shape:
            raise GridMismatchError(f"Potential shape {base.shape} differs from noise shape {noise.values.shape}")
        return base + noise.epsilon * noise.values * base

    def spin_potentials(self, grid: Grid1D, geometry: ChipGeometry) -> List[np.ndarray]:
        """Chip potentials of mF = 1 and mF = 2 on the grid (thin-wire closed form, bias ignored)."""
        return [self.field_service.thin_wire_potential(mF, grid.z, geometry) for mF in SPIN_STATES]

    def split_and_interfere(
        self,
        psi0: WaveFunction,
        geometry: ChipGeometry,
        t_split: float,
        epsilon: float,
        correlation: Correlation,
        seed: int,
        shot: int = 0,
        dt: float = DEFAULT_DT,
    ) -> FringePattern:
        """
        Evolve both spin components through a splitting pulse and interfere them.

        Each spin's potential value at the packet center (including the
        shot's mean noise) is kept out of the grid solve and applied as a
        phase, and the mean gradient of both spins is removed, so the grid
        follows the common center of mass.

        Args:
            psi0: Normalized initial wavefunction
            geometry: Chip geometry; its current drives the pulse
            t_split: Pulse duration in s
            epsilon: Perturbation strength
            correlation: Zero or Infinite correlation length
            seed: Ensemble seed
            shot: Shot index selecting the noise draw
            dt: Nominal time step in s

        Returns:
            |ψ1 + ψ2|² on psi0's grid
        """
        if t_split <= 0:
            raise ValueError(f"Split duration must be positive, got {t_split}")
        steps = max(int(round(t_split / dt)), 1)
        step = t_split / steps

        grid = psi0.grid
        z = grid.z
        center = psi0.mean_position()
        bases = self.spin_potentials(grid, geometry)
        slopes = [float(np.interp(center, z, np.gradient(base, grid.dz))) for base in bases]
        common_slope = 0.5 * sum(slopes)

        branches = []
        for spin_index, base in enumerate(bases):
            noise = self.noise_realization(grid.n_points, epsilon, correlation, seed, shot, spin_index)
            perturbed = self.perturbed_potential(base, noise)
            offset = float(np.interp(center, z, base)) * (1.0 + epsilon * float(np.mean(noise.values)))
            local = perturbed - offset - common_slope * (z - center)
            psi = self.evolve(psi0, local, step, steps)
            psi.amplitudes *= np.exp(-1j * offset * t_split / self.constants.hbar)
            branches.append(psi.amplitudes)

        density = np.abs(branches[0] + branches[1]) ** 2
        logger.debug(f"Shot {shot}: split {t_split * 1e6:.2f} us, epsilon={epsilon:g}, {correlation}")
        return FringePattern(grid=grid, density=density, time=t_split, shot_index=shot)

    def _safe_visibility(self, pattern: FringePattern, method: VisibilityMethod, shots: int) -> VisibilityEstimate:
        try:
            estimate = self.fringe_service.estimate_visibility(pattern, method)
        except (DegeneratePeriodError, NonConvergenceError) as e:
            logger.warning(f"No fringe visibility for pattern at {pattern.time * 1e6:.2f} us: {e}")
            return VisibilityEstimate(
                value=0.0, uncertainty=float(np.sqrt(1.0 / (2.0 * shots))), method=str(method), flagged=True
            )
        return VisibilityEstimate(
            value=estimate.value, uncertainty=estimate.uncertainty, method=estimate.method, sample_size=shots
        )

    def random_vector_ensemble(
        self,
        psi0: WaveFunction,
        geometry: ChipGeometry,
        t_split: float,
        epsilon: float,
        correlation: Correlation,
        shots: int,
        seed: int,
        dt: float = DEFAULT_DT,
        method: VisibilityMethod = VisibilityMethod.Fit,
        threads: Optional[int] = None,
    ) -> EnsembleResult:
        """
        Average split_and_interfere over independent perturbation draws.

        Shots run on the worker pool and are reduced in shot order.

        Returns:
            EnsembleResult with the averaged pattern, the multi-shot and
            normalized visibilities and every single-shot visibility
        """

        def shot_task(shot: int) -> Tuple[FringePattern, float]:
            pattern = self.split_and_interfere(psi0, geometry, t_split, epsilon, correlation, seed, shot, dt)
            return pattern, self._safe_visibility(pattern, method, 1).value

        outcomes = run_shot_workers(shot_task, shots, threads)
        patterns = [pattern for pattern, _ in outcomes]
        single_shot = [visibility for _, visibility in outcomes]

        mean_pattern = NoiseService.synthesize_multishot(patterns)
        multishot = self._safe_visibility(mean_pattern, method, shots)

        single_mean = float(np.mean(single_shot))
        single_std = float(np.std(single_shot))
        if single_mean > 0 and not multishot.flagged:
            v_norm = max(multishot.value / single_mean, 0.0)
            relative = multishot.uncertainty / multishot.value if multishot.value > 0 else 0.0
            error, flagged = NoiseService.error_bar(v_norm, relative, single_std, single_mean, shots)
        else:
            v_norm, error, flagged = 0.0, float(np.sqrt(1.0 / (2.0 * shots))), True
        normalized = VisibilityEstimate(
            value=v_norm, uncertainty=error, method=str(method), sample_size=shots, flagged=flagged
        )

        logger.info(
            f"Ensemble T1={t_split * 1e6:.1f} us, epsilon={epsilon:g}, {correlation}: "
            f"V_multi={multishot.value:.4f}, V_single={single_mean:.4f}, V_N={v_norm:.4f} ({shots} shots)"
        )
        return EnsembleResult(
            pattern=mean_pattern,
            multishot=multishot,
            single_shot=single_shot,
            normalized=normalized,
            epsilon=epsilon,
            correlation=str(correlation),
            t_split=t_split,
            seed=seed,
        )

    def visibility_decay_curve(
        self,
        psi0: WaveFunction,
        geometry: ChipGeometry,
        split_times: Sequence[float],
        epsilon: float,
        correlation: Correlation,
        shots: int,
        seed: int,
        dt: float = DEFAULT_DT,
        method: VisibilityMethod = VisibilityMethod.Fit,
        threads: Optional[int] = None,
    ) -> Tuple[List[EnsembleResult], Optional[DecayFit]]:
        """
        Ensemble visibility over a grid of split durations and its cubic decay fit.

        Every duration reuses the same seed, so the curve is built from
        paired perturbation draws.

        Returns:
            Tuple of (ensembles in input order, decay fit or None if too few
            points stay above the fit threshold)
        """
        results = [
            self.random_vector_ensemble(psi0, geometry, t, epsilon, correlation, shots, seed, dt, method, threads)
            for t in split_times
        ]
        points = [(result.t_split, result.multishot.value) for result in results]
        try:
            decay = FringeService.fit_visibility_decay(points)
        except InsufficientDataError as e:
            logger.warning(f"No decay fit for epsilon={epsilon:g}: {e}")
            decay = None
        return results, decay

    @staticmethod
    def snapshot_csv(
        pattern: Union[FringePattern, WaveFunction],
        path: Path,
        seed: int,
        epsilon: float,
        **metadata,
    ) -> Path:
        """Dump a density snapshot as (z_m, density) with seed and epsilon in the header."""
        density = pattern.density
        z = pattern.grid.z
        header = {"seed": seed, "epsilon": float(epsilon), **metadata}
        return write_csv(path, ["z_m", "density"], zip(z, density), header)
