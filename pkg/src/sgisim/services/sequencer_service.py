"""
Service for running and optimizing interferometer sequences.
Half-loop Monte-Carlo runs with far-field fringe synthesis, full-loop scans
of T2 + T3 and multi-parameter sequence optimization.
"""

import itertools
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ..models.constants import CONSTANTS, PhysicalConstants
from ..models.fringe import FringePattern, VisibilityEstimate, VisibilityMethod
from ..models.geometry import ChipGeometry, FieldModel
from ..models.results import HalfLoopResult, OptimizationResult, ScanPoint
from ..models.sequence import FullLoopSequence, HalfLoopSequence, NoiseInjection
from ..models.wavefunction import Grid1D
from ..models.wavepacket import ScaleMode, WavepacketState
from ..utils.errors import DegeneratePeriodError, NonConvergenceError
from ..utils.random_streams import shot_generator
from ..workers.shot_pool import run_shot_workers
from .dynamics_service import PULSE_DT, DynamicsService
from .fringe_service import FringeService
from .landscapes import ChipLandscape, MagneticLandscape, PulseSchedule
from .noise_service import NoiseService
from .phase_space_service import PhaseSpaceService

logger = logging.getLogger(__name__)

GRID_POINTS_PER_DIMENSION = {1: 21, 2: 9, 3: 5, 4: 4}
MAX_FREE_PARAMETERS = 4
FAR_FIELD_SPAN = 6.0
PHASE_SLOPE_STEP = 1e-3
DEGENERATE_SPREAD = 1e-9
REFINEMENT_SWEEPS = 3
GOLDEN_XTOL = 1e-6
STOP_OMEGA = 2.0 * np.pi * 850.0

SplitLandscapeFactory = Callable[[float, float], MagneticLandscape]


class _Branch:
    """Gaussian branch in the free-fall frame: center, momentum, phase and complex width Q."""

    __slots__ = ("u", "q", "phase", "width_q", "norm")

    def __init__(self, u: float, q: float, phase: float, width_q: complex, norm: complex):
        self.u = u
        self.q = q
        self.phase = phase
        self.width_q = width_q
        self.norm = norm

    def mapped(self, entries: np.ndarray, hbar: float) -> "_Branch":
        """Exact image under a linear phase-space map [[A, B], [C, D]]."""
        (a, b), (c, d) = entries
        u = a * self.u + b * self.q
        q = c * self.u + d * self.q
        denominator = c * self.width_q + d
        stretch = a + b / self.width_q
        return _Branch(
            u=u,
            q=q,
            phase=self.phase + 0.5 * (q * u - self.q * self.u) / hbar,
            width_q=(a * self.width_q + b) / denominator,
            norm=self.norm / np.sqrt(stretch + 0j),
        )

    def amplitude(self, z: np.ndarray, hbar: float) -> np.ndarray:
        offset = z - self.u
        return self.norm * np.exp(
            1j * (self.phase + self.q * offset / hbar + offset**2 / (2.0 * hbar * self.width_q))
        )

    def width(self, hbar: float) -> float:
        return float(np.sqrt(hbar / (2.0 * (1.0 / self.width_q).imag)))

    def local_wavevector(self, z: float, hbar: float) -> float:
        return (self.q + (z - self.u) * (1.0 / self.width_q).real) / hbar


class SequencerService:
    """Service class for sequence execution, scans and optimization."""

    def __init__(
        self,
        constants: PhysicalConstants = CONSTANTS,
        dynamics: Optional[DynamicsService] = None,
        phase_space: Optional[PhaseSpaceService] = None,
        fringe_service: Optional[FringeService] = None,
    ):
        self.constants = constants
        self.dynamics = dynamics or DynamicsService(constants)
        self.phase_space = phase_space or PhaseSpaceService(constants)
        self.fringe_service = fringe_service or FringeService()

    @property
    def mass(self) -> float:
        return self.constants.mass_rb87

    def _split(
        self,
        seq: HalfLoopSequence,
        landscape: MagneticLandscape,
        t_split: float,
        position_offset: float,
        sigma0: Sequence[float],
        pulse_dt: float,
    ) -> Tuple[_Branch, _Branch, float]:
        """Run the splitting pulse and express both branches in the free-fall frame."""
        hbar, mass = self.constants.hbar, self.mass
        g = self.constants.g_gravity if self.dynamics.gravity else 0.0
        z_start = seq.z_trap + 0.5 * g * seq.t_drop**2
        p_start = mass * g * seq.t_drop

        start = WavepacketState(position=[0.0, 0.0, z_start + position_offset], momentum=[0.0, 0.0, p_start], sigma0=sigma0)
        branches = []
        for mF in (2, 1):
            state = start.copy(spin_mF=mF)
            if t_split > 0:
                state = self.dynamics.propagate(state, landscape, pulse_dt, t_split, 0.0, ScaleMode.Gaussian)
            branches.append(state)

        z_nominal = z_start + p_start * t_split / mass + 0.5 * g * t_split**2
        p_nominal = p_start + mass * g * t_split
        frame = []
        for state in branches:
            u = state.position[2] - z_nominal
            sigma = state.sigma0[2] * state.scale[2]
            chirp = mass * state.scale_rate[2] / (hbar * state.scale[2])
            width_q = 1.0 / (hbar * chirp + 1j * hbar / (2.0 * sigma**2))
            frame.append(
                _Branch(
                    u=u,
                    q=state.momentum[2] - p_nominal,
                    phase=state.phase - p_nominal * u / hbar,
                    width_q=width_q,
                    norm=(2.0 * np.pi * sigma**2) ** -0.25 + 0j,
                )
            )
        split_phase = self.dynamics.phase_difference(branches[0], branches[1])
        return frame[0], frame[1], split_phase

    def _default_split_landscape(self, geometry: ChipGeometry, model: FieldModel) -> SplitLandscapeFactory:
        def factory(current: float, t_split: float) -> MagneticLandscape:
            return ChipLandscape(
                geometry.with_current(current), model, PulseSchedule([(0.0, t_split, 1.0)]), self.dynamics.field_service
            )

        return factory

    def far_field_pattern(
        self,
        branch_a: _Branch,
        branch_b: _Branch,
        omega: float,
        seq: HalfLoopSequence,
        grid: Optional[Grid1D] = None,
        extra_phase: float = 0.0,
        n_points: int = 1024,
    ) -> Tuple[FringePattern, _Branch, _Branch]:
        """
        Image |ψa + ψb|² after delay, stopping pulse and time of flight.

        Returns:
            Tuple of (pattern, mapped branch a, mapped branch b); a grid is
            built around the mapped branches when none is given
        """
        hbar = self.constants.hbar
        entries = self.phase_space.far_field_map(omega, seq.Td, seq.T2, seq.TOF).entries
        image_a = branch_a.mapped(entries, hbar)
        image_b = branch_b.mapped(entries, hbar)
        if grid is None:
            center = 0.5 * (image_a.u + image_b.u)
            reach = max(image_a.width(hbar), image_b.width(hbar)) * FAR_FIELD_SPAN + 0.5 * abs(image_a.u - image_b.u)
            grid = Grid1D.centered(center, dz=2.0 * reach / (n_points - 1), n_points=n_points)
        z = grid.z
        psi = image_a.amplitude(z, hbar) + image_b.amplitude(z, hbar) * np.exp(1j * extra_phase)
        return FringePattern(grid=grid, density=np.abs(psi) ** 2, time=seq.T1), image_a, image_b

    def run_half_loop(
        self,
        seq: HalfLoopSequence,
        noise: Optional[NoiseInjection] = None,
        geometry: Optional[ChipGeometry] = None,
        model: FieldModel = FieldModel.ThinWire,
        split_landscape: Optional[SplitLandscapeFactory] = None,
        omega_stop: float = STOP_OMEGA,
        sigma0: Sequence[float] = (1.2e-6, 1.2e-6, 1.2e-6),
        n_points: int = 1024,
        pulse_dt: float = PULSE_DT,
        method: VisibilityMethod = VisibilityMethod.Fit,
        threads: Optional[int] = None,
    ) -> HalfLoopResult:
        """
        Monte-Carlo half-loop run with a normalized multi-shot visibility.

        Each shot draws its current, timing, position, stopping-current and
        phase noise from its own stream, propagates both branches through the
        splitting pulse and images them through delay, stopping pulse and
        time of flight with the exact Gaussian transform.

        Args:
            seq: Half-loop sequence
            noise: Noise settings; the sequence's own or silent noise when None
            geometry: Chip geometry, required unless split_landscape is given
            model: Field model for the chip landscape
            split_landscape: Factory (current, t_split) -> landscape for the splitting pulse
            omega_stop: Angular frequency of the stopping pulse
            sigma0: Initial Gaussian widths in m
            n_points: Points of the far-field grid
            pulse_dt: Step of the splitting-pulse integration
            method: Fringe visibility estimator
            threads: Thread cap for the shots

        Returns:
            HalfLoopResult with V_N = multi-shot / mean single-shot visibility

        Raises:
            DegeneratePeriodError: If the nominal split gives no momentum difference
        """
        noise = noise or seq.noise or NoiseInjection()
        if split_landscape is None:
            if geometry is None:
                raise ValueError("Either a geometry or a split landscape factory is required")
            split_landscape = self._default_split_landscape(geometry, model)
        hbar = self.constants.hbar

        nominal_a, nominal_b, _ = self._split(
            seq, split_landscape(seq.current, seq.T1), seq.T1, 0.0, sigma0, pulse_dt
        )
        kick = abs(nominal_b.q - nominal_a.q) / hbar
        nominal, image_a, image_b = self.far_field_pattern(nominal_a, nominal_b, omega_stop, seq, n_points=n_points)
        grid = nominal.grid
        k_diff = abs(image_b.local_wavevector(grid.center, hbar) - image_a.local_wavevector(grid.center, hbar))
        if kick == 0 or k_diff == 0:
            logger.error(f"Half loop {seq.label}: no momentum difference after the split")
            raise DegeneratePeriodError("Splitting pulse produced no momentum difference")
        period = 2.0 * np.pi / k_diff

        phases = []
        for sign in (1.0, -1.0):
            current = seq.current * (1.0 + sign * PHASE_SLOPE_STEP)
            phases.append(self._split(seq, split_landscape(current, seq.T1), seq.T1, 0.0, sigma0, pulse_dt)[2])
        phase_slope = (phases[0] - phases[1]) / (2.0 * PHASE_SLOPE_STEP)

        def shot_task(shot: int) -> Tuple[FringePattern, float, float]:
            rng = shot_generator(noise.seed, shot)
            rel_current, jitter, position, stop_rel, phase = rng.standard_normal(5)
            t_split = max(seq.T1 + noise.pulse_timing_jitter * jitter, 0.0)
            current = seq.current * (1.0 + noise.rel_current_std * rel_current)
            omega = omega_stop * math.sqrt(max(1.0 + noise.stop_rel_current_std * stop_rel, 0.0))
            branch_a, branch_b, _ = self._split(
                seq, split_landscape(current, t_split), t_split, noise.initial_pos_std * position, sigma0, pulse_dt
            )
            extra_phase = noise.phase_offset + noise.phase_std * phase
            pattern, _, _ = self.far_field_pattern(branch_a, branch_b, omega, seq, grid, extra_phase)
            pattern.shot_index = shot
            visibility, fringe_phase = self._pattern_visibility(pattern, method, period)
            return pattern, visibility, fringe_phase

        outcomes = run_shot_workers(shot_task, noise.shots, threads)
        patterns = [pattern for pattern, _, _ in outcomes]
        single_shot = [visibility for _, visibility, _ in outcomes]
        fringe_phases = [fringe_phase for _, _, fringe_phase in outcomes]

        multishot = NoiseService.synthesize_multishot(patterns)
        fit = None
        try:
            if method is VisibilityMethod.Fit:
                fit = self.fringe_service.fit_fringe(multishot, chirped=True, period_hint=period)
                multi_estimate = VisibilityEstimate(
                    value=fit.visibility_raw,
                    uncertainty=fit.errors.get("visibility", 0.0),
                    method=str(method),
                    sample_size=noise.shots,
                )
            else:
                multi_estimate = self.fringe_service.estimate_visibility(multishot, method, period)
        except (DegeneratePeriodError, NonConvergenceError) as e:
            logger.warning(f"Half loop {seq.label}: multishot visibility unavailable ({e})")
            multi_estimate = VisibilityEstimate(value=0.0, uncertainty=0.0, method=str(method), flagged=True)

        single_mean = float(np.mean(single_shot))
        single_std = float(np.std(single_shot))
        if single_mean > 0 and not multi_estimate.flagged:
            v_norm = max(multi_estimate.value / single_mean, 0.0)
            relative = multi_estimate.uncertainty / multi_estimate.value if multi_estimate.value > 0 else 0.0
            error, flagged = NoiseService.error_bar(v_norm, relative, single_std, single_mean, noise.shots)
        else:
            v_norm, error, flagged = 0.0, float(np.sqrt(1.0 / (2.0 * noise.shots))), True

        normalized = VisibilityEstimate(
            value=v_norm, uncertainty=error, method=str(method), sample_size=noise.shots, flagged=flagged
        )
        logger.info(
            f"Half loop {seq.label or 'unnamed'}: V_N={v_norm:.4f}±{error:.4f} over {noise.shots} shots, "
            f"kick={kick * 1e-6:.4f} 1/um"
        )
        return HalfLoopResult(
            sequence=seq,
            patterns=patterns,
            multishot=multishot,
            visibility=normalized,
            multishot_visibility=multi_estimate,
            single_shot=single_shot,
            fit=fit,
            kick=kick,
            phase_slope=phase_slope,
            seed=noise.seed,
            fringe_phases=fringe_phases,
        )

    def _pattern_visibility(
        self, pattern: FringePattern, method: VisibilityMethod, period: float
    ) -> Tuple[float, float]:
        try:
            if method is VisibilityMethod.Fit:
                fit = self.fringe_service.fit_fringe(pattern, chirped=True, period_hint=period)
                return fit.visibility_raw, fit.phase
            return self.fringe_service.estimate_visibility(pattern, method, period).value, float("nan")
        except (DegeneratePeriodError, NonConvergenceError) as e:
            logger.warning(f"Shot {pattern.shot_index}: no visibility ({e})")
            return 0.0, float("nan")

    @staticmethod
    def scan_totals(seq: FullLoopSequence, half_range: float, points: int) -> np.ndarray:
        """T2 + T3 values centered on the sequence's own, clipped to the admissible range."""
        if points < 2:
            raise ValueError(f"A scan needs at least 2 points, got {points}")
        fixed = seq.T2 + seq.T3 + seq.T_d2
        low = max(seq.reverse_duration - half_range, 0.0)
        high = min(seq.reverse_duration + half_range, fixed)
        return np.linspace(low, high, points)

    def run_full_loop_scan(
        self,
        seq: FullLoopSequence,
        totals: Sequence[float],
        geometry: Optional[ChipGeometry] = None,
        model: FieldModel = FieldModel.ThinWire,
        analysis_phase: float = 0.0,
        threads: Optional[int] = None,
        **kwargs,
    ) -> List[ScanPoint]:
        """
        Scan T2 + T3 with T2 + T3 + T_d2 and the T2:T3 ratio held fixed.

        Returns:
            One ScanPoint per total, in input order

        Raises:
            ValueError: If a total leaves [0, T2 + T3 + T_d2]
        """
        sequences = [seq.with_reverse_duration(float(total)) for total in totals]

        def point_task(index: int) -> ScanPoint:
            scanned = sequences[index]
            outcome = self.dynamics.simulate_full_loop(scanned, geometry, model, **kwargs)
            return ScanPoint(
                reverse_duration=scanned.reverse_duration,
                population=outcome.population(analysis_phase),
                visibility=outcome.visibility,
                phase=outcome.phase_difference,
            )

        points = run_shot_workers(point_task, len(sequences), threads)
        logger.info(f"Scanned {len(points)} T2+T3 values for {seq.label or 'unnamed'}")
        return points

    @staticmethod
    def _apply(seq: FullLoopSequence, name: str, value: float) -> FullLoopSequence:
        if name == "reverse_duration":
            return seq.with_reverse_duration(value)
        return seq.with_times(**{name: value})

    @staticmethod
    def _default_bounds(seq: FullLoopSequence, name: str) -> Tuple[float, float]:
        if name == "reverse_duration":
            return 0.0, seq.T2 + seq.T3 + seq.T_d2
        value = getattr(seq, name)
        if value == 0:
            return 0.0, 10e-6
        return 0.5 * value, 1.5 * value

    def optimize_sequence(
        self,
        seq: FullLoopSequence,
        free: Sequence[str],
        geometry: Optional[ChipGeometry] = None,
        model: FieldModel = FieldModel.ThinWire,
        bounds: Optional[Dict[str, Tuple[float, float]]] = None,
        threads: Optional[int] = None,
        **kwargs,
    ) -> OptimizationResult:
        """
        Maximize the full-loop overlap over up to four sequence times.

        A coarse grid scan picks the start, the first free parameter is then
        refined alone, and finally all parameters are refined coordinate-wise
        with golden-section searches bracketed by the neighbouring grid points.
        Only improvements are accepted.

        Args:
            seq: Starting sequence
            free: Parameter names, either "reverse_duration" or time fields such as "T4"
            geometry: Chip geometry
            model: Field model
            bounds: Search range per parameter in s
            threads: Thread cap for the grid scan
            **kwargs: Passed to simulate_full_loop

        Returns:
            OptimizationResult with boundary and degenerate flags
        """
        free = list(free)
        if not 1 <= len(free) <= MAX_FREE_PARAMETERS:
            raise ValueError(f"Between 1 and {MAX_FREE_PARAMETERS} free parameters allowed, got {len(free)}")
        ranges = {name: (bounds or {}).get(name) or self._default_bounds(seq, name) for name in free}
        evaluations = {"count": 0}

        def build(values: Sequence[float]) -> Optional[FullLoopSequence]:
            candidate = seq
            try:
                for name, value in zip(free, values):
                    candidate = self._apply(candidate, name, float(value))
            except ValueError:
                return None
            return candidate

        def objective(values: Sequence[float]) -> float:
            candidate = build(values)
            if candidate is None:
                return -1.0
            return self.dynamics.simulate_full_loop(candidate, geometry, model, **kwargs).visibility

        per_dimension = GRID_POINTS_PER_DIMENSION[len(free)]
        axes = [np.linspace(low, high, per_dimension) for low, high in (ranges[name] for name in free)]
        grid = list(itertools.product(*axes))
        scores = run_shot_workers(lambda index: objective(grid[index]), len(grid), threads)
        evaluations["count"] = len(grid)

        valid = [score for score in scores if score >= 0]
        if not valid:
            raise ValueError("No admissible sequence inside the search ranges")
        if max(valid) - min(valid) < DEGENERATE_SPREAD:
            logger.warning("Visibility does not depend on the free parameters, optimum is degenerate")
            start = [getattr(seq, name) if name != "reverse_duration" else seq.reverse_duration for name in free]
            return OptimizationResult(
                sequence=seq,
                visibility=float(max(valid)),
                parameters=dict(zip(free, map(float, start))),
                degenerate=True,
                evaluations=evaluations["count"],
            )

        best_index = int(np.argmax(scores))
        best = list(grid[best_index])
        best_score = float(scores[best_index])
        steps = [(high - low) / (per_dimension - 1) for low, high in (ranges[name] for name in free)]

        def refine(axis: int) -> bool:
            nonlocal best_score
            low, high = ranges[free[axis]]
            lower = max(low, best[axis] - steps[axis])
            upper = min(high, best[axis] + steps[axis])
            if not lower < best[axis] < upper:
                return False

            def negative(value: float) -> float:
                trial = list(best)
                trial[axis] = value
                return -objective(trial)

            try:
                result = minimize_scalar(
                    negative,
                    bracket=(lower, best[axis], upper),
                    method="golden",
                    options={"xtol": GOLDEN_XTOL},
                )
            except ValueError as e:
                # Bracket ends are not both worse than the current best
                logger.debug(f"No bracket for {free[axis]} around {best[axis]:.6e}: {e}")
                evaluations["count"] += 3
                return False
            evaluations["count"] += int(result.nfev)
            if lower <= result.x <= upper and -result.fun > best_score:
                best[axis] = float(result.x)
                best_score = float(-result.fun)
                return True
            return False

        refine(0)
        for _ in range(REFINEMENT_SWEEPS):
            improved = [refine(axis) for axis in range(len(free))]
            if not any(improved):
                break

        boundary = any(
            min(abs(value - low), abs(high - value)) <= 1e-3 * (high - low)
            for value, (low, high) in zip(best, (ranges[name] for name in free))
        )
        if boundary:
            logger.warning(f"Optimum on the search boundary: {dict(zip(free, best))}")
        optimized = build(best)
        logger.info(f"Optimized {free}: V={best_score:.6f} after {evaluations['count']} evaluations")
        return OptimizationResult(
            sequence=optimized,
            visibility=best_score,
            parameters=dict(zip(free, best)),
            boundary=boundary,
            evaluations=evaluations["count"],
        )
