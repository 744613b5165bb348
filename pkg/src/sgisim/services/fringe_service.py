"""
Service for fringe and population analysis.
Least-squares fits of fringe patterns, Ramsey curves, visibility decays,
scan envelopes and expansion laws, plus the Fourier visibility estimator.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit, least_squares, minimize_scalar
from scipy.signal import find_peaks, hilbert

from ..models.fringe import (
    DecayFit,
    EnvelopeSineFit,
    FringeFit,
    FringePattern,
    RamseyFit,
    SqrtQuadraticFit,
    VisibilityEstimate,
    VisibilityMethod,
)
from ..models.wavefunction import Grid1D
from ..utils.errors import (
    DegeneratePeriodError,
    InsufficientDataError,
    NonConvergenceError,
)

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
NOISE_FLOOR_FACTOR = 3.0
NUMERICAL_FLOOR = 1e-6
PEAK_WINDOW_BINS = 2
MIN_OSCILLATIONS = 3.0
# Envelope above ~4% of its peak counts as visible
VISIBLE_HALF_WIDTH = 2.5
DECAY_MIN_VISIBILITY = 0.2


def _dtft(values: np.ndarray, u: np.ndarray, k: float) -> complex:
    return complex(np.sum(values * np.exp(-1j * k * u)))


def _fringe_model(params: np.ndarray, u: np.ndarray, chirped: bool) -> np.ndarray:
    amplitude, center, width, visibility, wavevector, phase, offset = params[:7]
    argument = wavevector * u + phase
    if chirped:
        argument = argument + params[7] * u**2
    envelope = amplitude * np.exp(-((u - center) ** 2) / (2.0 * width**2))
    return envelope * (1.0 + visibility * np.sin(argument)) + offset


def _r_squared(data: np.ndarray, residual: np.ndarray) -> float:
    total = float(np.sum((data - data.mean()) ** 2))
    if total == 0:
        return 1.0 if not np.any(residual) else 0.0
    return 1.0 - float(np.sum(residual**2)) / total


def _parameter_errors(result, n_points: int) -> np.ndarray:
    n_params = result.x.size
    dof = max(n_points - n_params, 1)
    residual_variance = 2.0 * result.cost / dof
    covariance = np.linalg.pinv(result.jac.T @ result.jac) * residual_variance
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None))


class FringeService:
    """Service class for fringe fitting and spectral visibility."""

    @staticmethod
    def synthetic_pattern(
        grid: Grid1D,
        amplitude: float,
        center: float,
        sigma: float,
        visibility: float,
        wavelength: float,
        phase: float,
        offset: float = 0.0,
        chirp: float = 0.0,
        z_ref: Optional[float] = None,
    ) -> FringePattern:
        """Sample A·exp[−(z−z0)²/2σ²]·[1 + V sin(2π(z−z_ref)/λ + φ + k1(z−z_ref)²)] + c."""
        z_ref = grid.center if z_ref is None else z_ref
        u = grid.z - z_ref
        argument = 2.0 * np.pi * u / wavelength + phase + chirp * u**2
        envelope = amplitude * np.exp(-((grid.z - center) ** 2) / (2.0 * sigma**2))
        return FringePattern(grid=grid, density=envelope * (1.0 + visibility * np.sin(argument)) + offset)

    def _peak_bin(self, pattern: FringePattern) -> Tuple[np.ndarray, int]:
        density = pattern.density
        spectrum = np.abs(np.fft.rfft(density))
        zero_amplitude = abs(float(np.sum(density)))

        peaks, _ = find_peaks(spectrum)
        peaks = peaks[peaks >= 1]
        floor = float(np.median(spectrum[1:])) if spectrum.size > 1 else 0.0
        if peaks.size:
            best = int(peaks[np.argmax(spectrum[peaks])])
        if (
            not peaks.size
            or spectrum[best] <= NOISE_FLOOR_FACTOR * floor
            or spectrum[best] <= NUMERICAL_FLOOR * zero_amplitude
        ):
            logger.error("No fringe peak above the spectral noise floor")
            raise DegeneratePeriodError("Spectrum has no peak above 3x the noise floor")
        return spectrum, best

    def spectral_peak(self, pattern: FringePattern) -> Tuple[float, complex, complex]:
        """
        Dominant nonzero spatial frequency of a pattern.

        The coarse peak of the discrete spectrum is refined on the continuous
        transform within ±2 bins.

        Returns:
            Tuple of (k0 in rad/m, transform at k0, transform at 0), both
            transforms taken about the grid center

        Raises:
            DegeneratePeriodError: If no peak rises above 3x the spectral noise floor
        """
        grid = pattern.grid
        u = grid.z - grid.center
        density = pattern.density
        _, best = self._peak_bin(pattern)

        bin_k = 2.0 * np.pi / (grid.n_points * grid.dz)
        low = max(best - PEAK_WINDOW_BINS, 0.5) * bin_k
        high = (best + PEAK_WINDOW_BINS) * bin_k
        refined = minimize_scalar(
            lambda k: -abs(_dtft(density, u, k)),
            bounds=(low, high),
            method="bounded",
            options={"xatol": 1e-6 * bin_k},
        )
        k0 = float(refined.x)
        return k0, _dtft(density, u, k0), complex(np.sum(density))

    def dominant_wavevector(self, pattern: FringePattern) -> float:
        return self.spectral_peak(pattern)[0]

    def fft_visibility(self, pattern: FringePattern) -> float:
        """
        Fourier visibility V = [A(+k0) + A(−k0)]/A(0).

        Each amplitude sums the discrete spectrum over ±2 bins, around the
        dominant peak for A(±k0) and around zero for A(0), so fringes whose
        wavevector spreads over neighbouring bins still count in full. The
        side window starts above the zero window.

        Raises:
            DegeneratePeriodError: If the spectrum has no usable peak
        """
        spectrum, best = self._peak_bin(pattern)
        zero = spectrum[0] + 2.0 * float(np.sum(spectrum[1 : PEAK_WINDOW_BINS + 1]))
        if zero == 0:
            raise DegeneratePeriodError("Pattern has zero mean")
        low = max(best - PEAK_WINDOW_BINS, PEAK_WINDOW_BINS + 1)
        side = float(np.sum(spectrum[low : best + PEAK_WINDOW_BINS + 1]))
        return float(2.0 * side / zero)

    def fit_fringe(
        self,
        pattern: FringePattern,
        chirped: bool = False,
        period_hint: Optional[float] = None,
    ) -> FringeFit:
        """
        Fit a Gaussian-enveloped sine to a fringe pattern.

        Args:
            pattern: Density on a uniform grid
            chirped: Add a quadratic phase k1·(z − z_ref)² to the fringe argument
            period_hint: Start period in m; bypasses the spectral-peak requirement

        Returns:
            FringeFit with raw and clamped visibility, parameter errors and R²

        Raises:
            DegeneratePeriodError: If no period can be found or fewer than 3
                oscillations are visible
            NonConvergenceError: If the fit does not converge within 200 iterations
        """
        grid = pattern.grid
        z_ref = grid.center
        scale = grid.span
        u = (grid.z - z_ref) / scale
        density = pattern.density
        norm = float(np.max(np.abs(density))) or 1.0
        data = density / norm

        offset0 = float(np.min(data))
        weights = np.clip(data - offset0, 0.0, None)
        if weights.sum() <= 0:
            raise DegeneratePeriodError("Pattern carries no signal above its offset")
        center0 = float(np.sum(weights * u) / weights.sum())
        width0 = float(np.sqrt(np.sum(weights * (u - center0) ** 2) / weights.sum()))

        if period_hint is not None:
            if period_hint <= 0:
                raise ValueError(f"period_hint must be positive, got {period_hint}")
            k0 = 2.0 * np.pi / period_hint
            peak = _dtft(density, grid.z - z_ref, k0)
            zero = complex(np.sum(density))
        else:
            k0, peak, zero = self.spectral_peak(pattern)
            visible = 2.0 * VISIBLE_HALF_WIDTH * width0 * scale * k0 / (2.0 * np.pi)
            if visible < MIN_OSCILLATIONS:
                logger.error(f"Only {visible:.2f} visible oscillations in pattern")
                raise DegeneratePeriodError(
                    f"Pattern shows {visible:.2f} oscillations, at least {MIN_OSCILLATIONS:.0f} needed"
                )

        visibility0 = float(np.clip(2.0 * abs(peak) / abs(zero), 0.05, 1.0)) if abs(zero) > 0 else 0.5
        phase0 = float(np.angle(peak) + 0.5 * np.pi)
        amplitude0 = float(np.max(data) - offset0) / (1.0 + visibility0)

        start = [amplitude0, center0, width0, visibility0, k0 * scale, phase0, offset0]
        if chirped:
            start.append(0.0)

        def residuals(params):
            return _fringe_model(params, u, chirped) - data

        result = least_squares(
            residuals,
            np.array(start),
            method="lm",
            ftol=1e-10,
            xtol=1e-12,
            max_nfev=MAX_ITERATIONS * (len(start) + 1),
        )
        if result.status <= 0:
            logger.error(f"Fringe fit did not converge: {result.message}")
            raise NonConvergenceError(f"Fringe fit did not converge: {result.message}")

        errors = _parameter_errors(result, u.size)
        amplitude, center, width, visibility, wavevector, phase, offset = result.x[:7]
        period = 2.0 * np.pi * scale / abs(wavevector)

        fit = FringeFit(
            amplitude=float(amplitude * norm),
            center=float(center * scale + z_ref),
            width=float(abs(width) * scale),
            visibility=float(np.clip(visibility, 0.0, 1.0)),
            visibility_raw=float(visibility),
            period=float(period),
            phase=float(np.angle(np.exp(1j * phase))),
            offset=float(offset * norm),
            z_ref=float(z_ref),
            chirp=float(result.x[7] / scale**2) if chirped else None,
            errors={
                "amplitude": float(errors[0] * norm),
                "center": float(errors[1] * scale),
                "width": float(errors[2] * scale),
                "visibility": float(errors[3]),
                "period": float(period * errors[4] / abs(wavevector)),
                "phase": float(errors[5]),
                "offset": float(errors[6] * norm),
                **({"chirp": float(errors[7] / scale**2)} if chirped else {}),
            },
            r_squared=_r_squared(data, result.fun),
        )
        logger.debug(
            f"Fringe fit: V={fit.visibility_raw:.4f}±{fit.errors['visibility']:.4f}, "
            f"period={fit.period * 1e6:.4f} um, R2={fit.r_squared:.5f}"
        )
        return fit

    @staticmethod
    def fit_residual_norm(pattern: FringePattern, fit: FringeFit) -> float:
        """Root-mean-square residual of a fringe fit on its pattern."""
        model = FringeService.synthetic_pattern(
            pattern.grid,
            fit.amplitude,
            fit.center,
            fit.width,
            fit.visibility_raw,
            fit.period,
            fit.phase,
            fit.offset,
            fit.chirp or 0.0,
            z_ref=fit.z_ref,
        )
        return float(np.sqrt(np.mean((model.density - pattern.density) ** 2)))

    @staticmethod
    def fit_ramsey(
        samples: Sequence[Tuple[float, float]],
        reference_contrast: Optional[float] = None,
        reference_error: float = 0.0,
    ) -> RamseyFit:
        """
        Fit P(φ) = 0.5·C·sin(φ + φ0) + const to a Ramsey phase scan.

        Args:
            samples: (phase in rad, population) pairs
            reference_contrast: Contrast of the no-gradient reference sequence
            reference_error: Uncertainty of the reference contrast

        Returns:
            RamseyFit, normalized to the reference when one is given

        Raises:
            InsufficientDataError: With fewer than 6 samples or a span below one period
            NonConvergenceError: If the fit fails
        """
        data = np.asarray(samples, dtype=float)
        if data.ndim != 2 or data.shape[0] < 6:
            raise InsufficientDataError("Ramsey fit needs at least 6 phase samples")
        phi, population = data[:, 0], data[:, 1]
        n = phi.size
        if np.ptp(phi) < 2.0 * np.pi * (1.0 - 1.0 / n) - 1e-12:
            raise InsufficientDataError("Ramsey phase samples must span a full period")

        design = np.column_stack([np.sin(phi), np.cos(phi), np.ones(n)])
        (a, b, c), *_ = np.linalg.lstsq(design, population, rcond=None)
        start = [2.0 * np.hypot(a, b), np.arctan2(b, a), c]

        def model(x, contrast, phi0, offset):
            return 0.5 * contrast * np.sin(x + phi0) + offset

        try:
            popt, pcov = curve_fit(model, phi, population, p0=start, maxfev=MAX_ITERATIONS * 4)
        except RuntimeError as e:
            logger.error(f"Ramsey fit failed: {e}")
            raise NonConvergenceError(f"Ramsey fit failed: {e}")

        contrast, phi0, offset = popt
        if contrast < 0:
            contrast, phi0 = -contrast, phi0 + np.pi
        errors = np.sqrt(np.clip(np.diag(pcov), 0.0, None))

        normalized = normalized_error = None
        if reference_contrast is not None:
            if reference_contrast <= 0:
                raise ValueError(f"Reference contrast must be positive, got {reference_contrast}")
            normalized = contrast / reference_contrast
            normalized_error = normalized * np.hypot(
                errors[0] / contrast if contrast > 0 else 0.0,
                reference_error / reference_contrast,
            )

        return RamseyFit(
            contrast=float(contrast),
            phi0=float(np.angle(np.exp(1j * phi0))),
            offset=float(offset),
            contrast_error=float(errors[0]),
            phi0_error=float(errors[1]),
            offset_error=float(errors[2]),
            normalized_contrast=None if normalized is None else float(normalized),
            normalized_error=None if normalized_error is None else float(normalized_error),
        )

    @staticmethod
    def fit_visibility_decay(points: Sequence[Tuple[float, float]]) -> DecayFit:
        """
        Fit V(t) = exp[−(A1·t + A2·t² + A3·t³)] to points with V > 0.2.

        Raises:
            InsufficientDataError: If fewer than 4 usable points remain
        """
        data = np.asarray(points, dtype=float).reshape(-1, 2)
        usable = data[(data[:, 1] > DECAY_MIN_VISIBILITY) & (data[:, 1] <= 1.0)]
        if usable.shape[0] < 4:
            raise InsufficientDataError(
                f"Decay fit needs 4 points with V > {DECAY_MIN_VISIBILITY}, got {usable.shape[0]}"
            )

        t, v = usable[:, 0], usable[:, 1]
        t_scale = float(np.max(np.abs(t))) or 1.0
        tau = t / t_scale
        design = np.column_stack([tau, tau**2, tau**3])
        target = -np.log(v)
        coefficients, *_ = np.linalg.lstsq(design, target, rcond=None)
        residual = design @ coefficients - target
        physical = [float(coefficients[j] / t_scale ** (j + 1)) for j in range(3)]

        logger.info(f"Decay fit over {t.size} points: A = {physical}")
        return DecayFit(coefficients=physical, r_squared=_r_squared(target, residual), n_points=int(t.size))

    @staticmethod
    def fit_envelope_sine(samples: Sequence[Tuple[float, float]]) -> EnvelopeSineFit:
        """
        Fit P(t) = offset + B·exp[−(t − t_peak)²/2w²]·sin(Ω·t + θ) to a scan.

        Returns:
            EnvelopeSineFit; t_peak is the optimal scanned duration

        Raises:
            DegeneratePeriodError: If the scan carries no oscillation
            InsufficientDataError: With fewer than 8 samples
            NonConvergenceError: If the fit fails
        """
        data = np.asarray(samples, dtype=float)
        if data.ndim != 2 or data.shape[0] < 8:
            raise InsufficientDataError("Envelope fit needs at least 8 samples")
        order = np.argsort(data[:, 0])
        t, population = data[order, 0], data[order, 1]

        offset0 = float(np.mean(population))
        signal = population - offset0
        if np.ptp(signal) <= 1e-9 * max(1.0, abs(offset0)):
            logger.error("Scan has no oscillation, envelope parameters unidentifiable")
            raise DegeneratePeriodError("Zero-amplitude scan: envelope parameters unidentifiable")

        t_mid = 0.5 * (t[0] + t[-1])
        t_scale = 0.5 * (t[-1] - t[0])
        tau = (t - t_mid) / t_scale

        envelope = np.abs(hilbert(signal))
        peak0 = float(np.sum(envelope**2 * tau) / np.sum(envelope**2))
        width0 = float(np.sqrt(np.sum(envelope**2 * (tau - peak0) ** 2) / np.sum(envelope**2)))
        width0 = max(width0 * np.sqrt(2.0), 0.2)

        spectrum = np.abs(np.fft.rfft(signal, n=8 * tau.size))
        frequencies = 2.0 * np.pi * np.fft.rfftfreq(8 * tau.size, d=float(np.mean(np.diff(tau))))
        omega0 = float(frequencies[np.argmax(spectrum)])
        projection = np.sum(signal * np.exp(-1j * omega0 * tau))
        theta0 = float(np.angle(projection) + 0.5 * np.pi)
        amplitude0 = float(np.max(envelope))

        def model(params, x):
            offset, amplitude, peak, width, omega, theta = params
            return offset + amplitude * np.exp(-((x - peak) ** 2) / (2.0 * width**2)) * np.sin(omega * x + theta)

        result = least_squares(
            lambda p: model(p, tau) - population,
            np.array([offset0, amplitude0, peak0, width0, omega0, theta0]),
            method="lm",
            ftol=1e-10,
            xtol=1e-12,
            max_nfev=MAX_ITERATIONS * 7,
        )
        if result.status <= 0:
            logger.error(f"Envelope fit did not converge: {result.message}")
            raise NonConvergenceError(f"Envelope fit did not converge: {result.message}")

        offset, amplitude, peak, width, omega, theta = result.x
        if amplitude < 0:
            amplitude, theta = -amplitude, theta + np.pi
        # Back to physical time: Ω·τ + θ = (Ω/t_scale)·t + θ − Ω·t_mid/t_scale
        frequency = omega / t_scale
        errors = _parameter_errors(result, tau.size)
        return EnvelopeSineFit(
            offset=float(offset),
            amplitude=float(amplitude),
            t_peak=float(peak * t_scale + t_mid),
            width=float(abs(width) * t_scale),
            frequency=float(frequency),
            phase=float(np.angle(np.exp(1j * (theta - omega * t_mid / t_scale)))),
            r_squared=_r_squared(population, result.fun),
            errors={
                "offset": float(errors[0]),
                "amplitude": float(errors[1]),
                "t_peak": float(errors[2] * t_scale),
                "width": float(errors[3] * t_scale),
                "frequency": float(errors[4] / t_scale),
            },
        )

    @staticmethod
    def fit_sqrt_quadratic(samples: Sequence[Tuple[float, float]]) -> SqrtQuadraticFit:
        """
        Fit w(t) = sqrt(a + b·t²) by linear least squares on w².

        Raises:
            InsufficientDataError: With fewer than 3 samples
        """
        data = np.asarray(samples, dtype=float)
        if data.ndim != 2 or data.shape[0] < 3:
            raise InsufficientDataError("Expansion fit needs at least 3 samples")
        t, w = data[:, 0], data[:, 1]
        design = np.column_stack([np.ones_like(t), t**2])
        (a, b), *_ = np.linalg.lstsq(design, w**2, rcond=None)
        negative = bool(a < 0)
        if negative:
            logger.warning(f"Expansion fit gave a negative offset a={a:.4g}")
        return SqrtQuadraticFit(a=float(a), b=float(b), negative_offset=negative)

    @staticmethod
    def fringe_fit_to_json(fit: FringeFit, path: Path) -> Dict[str, Dict[str, float]]:
        """Write a fit report with value/sigma pairs per parameter."""
        values = {
            "amplitude": fit.amplitude,
            "center": fit.center,
            "width": fit.width,
            "visibility": fit.visibility_raw,
            "period": fit.period,
            "phase": fit.phase,
            "offset": fit.offset,
        }
        if fit.chirp is not None:
            values["chirp"] = fit.chirp
        report = {
            name: {"value": float(value), "sigma": float(fit.errors.get(name, float("nan")))}
            for name, value in values.items()
        }
        report["visibility_clamped"] = {"value": fit.visibility, "sigma": fit.errors.get("visibility", 0.0)}
        report["r_squared"] = {"value": fit.r_squared, "sigma": 0.0}

        with open(path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
        logger.info(f"Fit report written to {path}")
        return report

    @staticmethod
    def read_pattern_csv(path: Path) -> FringePattern:
        """
        Read a (z_m, density) CSV with '#' comment lines into a FringePattern.

        Raises:
            ValueError: If the positions are not uniformly spaced
        """
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=float, usecols=(0, 1))
        z, density = data[:, 0], data[:, 1]
        spacing = np.diff(z)
        if spacing.size == 0 or np.ptp(spacing) > 1e-6 * abs(spacing.mean()):
            raise ValueError(f"Pattern in {path} is not on a uniform grid")
        grid = Grid1D(z_min=float(z[0]), dz=float(spacing.mean()), n_points=z.size)
        return FringePattern(grid=grid, density=density)

    def estimate_visibility(
        self, pattern: FringePattern, method: VisibilityMethod, period_hint: Optional[float] = None
    ) -> VisibilityEstimate:
        """
        Visibility of a pattern by chirped fit or by the Fourier estimator.

        Raises:
            ValueError: If the method is not Fit or Fft
        """
        if method is VisibilityMethod.Fit:
            fit = self.fit_fringe(pattern, chirped=True, period_hint=period_hint)
            return VisibilityEstimate(
                value=fit.visibility_raw,
                uncertainty=fit.errors.get("visibility", 0.0),
                method=str(method),
            )
        if method is VisibilityMethod.Fft:
            return VisibilityEstimate(value=self.fft_visibility(pattern), uncertainty=0.0, method=str(method))
        raise ValueError(f"Visibility method {method} does not apply to patterns")
