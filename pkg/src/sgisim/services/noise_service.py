"""
Service for multi-shot visibility statistics.
Analytic visibility under Gaussian fluctuations, finite-sample errors and
ensemble synthesis of fringe patterns.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..models.fringe import FringePattern
from ..models.noise import FluctuationSpec
from ..utils.errors import GridMismatchError
from ..utils.random_streams import shot_generator

logger = logging.getLogger(__name__)

DEGENERATE_VISIBILITY = 1e-6


class NoiseService:
    """Service class for shot-to-shot noise statistics."""

    @staticmethod
    def analytic_visibility(spec: FluctuationSpec, sigma_z: float, correlated: bool = True) -> float:
        """
        Multi-shot visibility of a Gaussian packet under phase and wavevector noise.

        Position noise widens the packet to σ̄ = sqrt(σ_z² + ⟨δz²⟩).

        Args:
            spec: Fluctuation amplitudes
            sigma_z: Packet width in m
            correlated: Whether δφ and δk are correlated with δφ/δk = z0

        Returns:
            Visibility in [0, 1]
        """
        if sigma_z <= 0:
            raise ValueError(f"sigma_z must be positive, got {sigma_z}")
        sigma_bar_sq = sigma_z**2 + spec.pos_rms**2
        chirp = 1.0 + sigma_bar_sq * spec.k_rms**2
        if correlated:
            return float(np.exp(-0.5 * spec.phase_rms**2 / chirp) / np.sqrt(chirp))
        return float(np.exp(-0.5 * spec.phase_rms**2) / np.sqrt(chirp))

    @staticmethod
    def visibility_vs_splittime(T, spec: FluctuationSpec, sigma_z: float):
        """Visibility after a splitting pulse of duration T with δk = ηκT and δφ = κ·z0·ηT."""
        T = np.asarray(T, dtype=float)
        if np.any(T < 0):
            raise ValueError("Split time must be non-negative")
        k_rms = spec.rel_current_rms * spec.kappa * T
        chirp = 1.0 + sigma_z**2 * k_rms**2
        value = np.exp(-0.5 * (spec.z_offset * k_rms) ** 2 / chirp) / np.sqrt(chirp)
        return float(value) if value.ndim == 0 else value

    @staticmethod
    def extended_multishot(
        z_mean: float, z_quad: float, sigma_bar: float, k_rms: float, phase_rms: float
    ) -> float:
        """Large-N multi-shot visibility with a packet offset from the quadrupole center."""
        if sigma_bar <= 0:
            raise ValueError(f"sigma_bar must be positive, got {sigma_bar}")
        chirp = 1.0 + sigma_bar**2 * k_rms**2
        offset_term = np.exp(-0.5 * (z_mean - z_quad) ** 2 * k_rms**2 / chirp)
        return float(np.exp(-0.5 * phase_rms**2) * offset_term / np.sqrt(chirp))

    @staticmethod
    def finite_sample_std(v_mean: float, n: int) -> float:
        """Spread of an N-shot visibility estimate, sqrt((1 − V²)/N)."""
        if not 0.0 <= v_mean <= 1.0:
            raise ValueError(f"Visibility must lie in [0, 1], got {v_mean}")
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n}")
        return float(np.sqrt((1.0 - v_mean**2) / n))

    @staticmethod
    def error_bar(
        v_norm: float,
        fit_err_multishot: float,
        singleshot_std: float,
        singleshot_mean: float,
        n: int,
    ) -> Tuple[float, bool]:
        """
        Uncertainty of a normalized multi-shot visibility.

        Args:
            v_norm: Normalized visibility V_N
            fit_err_multishot: Relative fit error of the multi-shot visibility
            singleshot_std: Spread of the single-shot visibilities
            singleshot_mean: Mean single-shot visibility
            n: Number of shots

        Returns:
            Tuple of (error, flagged). flagged is set when V_N is too small for
            the relative form and the V → 0 limit of the finite-sample term is used.
        """
        if min(v_norm, fit_err_multishot, singleshot_std, singleshot_mean) < 0 or n < 1:
            raise ValueError("Inputs must be non-negative and n at least 1")

        if v_norm < DEGENERATE_VISIBILITY:
            logger.warning(f"V_N={v_norm:.3g} too small for relative errors, using V->0 limit")
            return float(np.sqrt(1.0 / (2.0 * n))), True

        singleshot_rel = singleshot_std / singleshot_mean if singleshot_mean > 0 else 0.0
        variance = (
            fit_err_multishot**2
            + singleshot_rel**2 / n
            + ((1.0 - v_norm**2) / v_norm) ** 2 / (2.0 * n)
        )
        return float(v_norm * np.sqrt(variance)), False

    @staticmethod
    def synthesize_multishot(
        patterns: Sequence[FringePattern], weights: Optional[Sequence[float]] = None
    ) -> FringePattern:
        """
        Pointwise (weighted) average of single-shot patterns.

        Raises:
            GridMismatchError: If the patterns don't share one grid
            ValueError: If no patterns are given or the weights are unusable
        """
        if not patterns:
            raise ValueError("At least one pattern is required")
        grid = patterns[0].grid
        for pattern in patterns[1:]:
            if not grid.matches(pattern.grid):
                logger.error("Multishot synthesis over patterns on different grids")
                raise GridMismatchError(f"Grid mismatch: {grid} vs {pattern.grid}")

        if weights is None:
            w = np.full(len(patterns), 1.0 / len(patterns))
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (len(patterns),) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("Weights must be non-negative, one per pattern, with positive sum")
            w = w / w.sum()

        stack = np.stack([pattern.density for pattern in patterns])
        times = np.array([pattern.time for pattern in patterns])
        return FringePattern(grid=grid, density=w @ stack, time=float(w @ times))

    @staticmethod
    def gaussian_phase_weights(
        currents: Sequence[float],
        kappa: float,
        z0: float,
        T1: float,
        eta: float,
        reference_current: Optional[float] = None,
    ) -> np.ndarray:
        """
        Weights that turn a current scan into a normal phase distribution.

        The phase of each shot is linear in its current with slope κ·z0·T1/I,
        and the target phase width is κ·z0·T1·η. Currents are taken to sample
        their range uniformly.
        """
        currents = np.asarray(currents, dtype=float)
        reference = float(np.mean(currents)) if reference_current is None else reference_current
        if reference <= 0 or eta <= 0:
            raise ValueError("Reference current and eta must be positive")
        phases = kappa * z0 * T1 * (currents - reference) / reference
        width = kappa * z0 * T1 * eta
        weights = np.exp(-0.5 * (phases / width) ** 2)
        return weights / weights.sum()

    @staticmethod
    def sample_ensemble_visibility(phases: Sequence[float]) -> float:
        """|⟨exp(iφ)⟩| over a set of shot phases."""
        phases = np.asarray(phases, dtype=float)
        if phases.size == 0:
            raise ValueError("At least one phase is required")
        return float(np.abs(np.mean(np.exp(1j * phases))))

    @staticmethod
    def noise_mc(
        spec: FluctuationSpec,
        sigma_z: float,
        shots: int,
        seed: int,
        correlated: bool = True,
    ) -> float:
        """
        Monte-Carlo multi-shot visibility for the same model as analytic_visibility.

        Each shot draws δk, δφ and δz from Gaussians and contributes the
        fringe amplitude of its displaced Gaussian packet.
        """
        if shots < 1:
            raise ValueError(f"shots must be at least 1, got {shots}")
        rng = shot_generator(seed)
        dk = rng.normal(0.0, spec.k_rms, shots) if spec.k_rms > 0 else np.zeros(shots)
        dz = rng.normal(0.0, spec.pos_rms, shots) if spec.pos_rms > 0 else np.zeros(shots)
        if correlated:
            offset = spec.phase_rms / spec.k_rms if spec.k_rms > 0 else 0.0
            dphi = offset * dk
        else:
            dphi = rng.normal(0.0, spec.phase_rms, shots) if spec.phase_rms > 0 else np.zeros(shots)
        amplitudes = np.exp(-0.5 * (sigma_z * dk) ** 2 + 1j * (dphi + dk * dz))
        return float(np.abs(np.mean(amplitudes)))
