"""
Command-line entry point.
Parses the subcommands, loads settings and scenarios, runs the startup
checks and writes each command's CSV and JSON results with a manifest.
"""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .models import (
    Correlation,
    FieldModel,
    FluctuationSpec,
    FullLoopSequence,
    Grid1D,
    HalfLoopAnalytic,
    HalfLoopSequence,
    NoiseInjection,
    ScaleMode,
    VisibilityMethod,
    load_scenarios,
)
from .models.geometry import ChipGeometry
from .services import (
    DynamicsService,
    FringeService,
    HDService,
    NoiseService,
    OutputService,
    PhaseSpaceService,
    QuantumService,
    SequencerService,
    WignerService,
)
from .services.hd_service import TF_GAUSSIAN_WIDTH_FACTOR, tf_momentum_width_factor, tf_position_width_factor
from .utils import SimulationConfig, config, load_simulation_config, run_all_checks, units

logging.basicConfig(
    filename="sgisim.log",
    encoding="utf-8",
    level=logging.DEBUG,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    datefmt="%d.%m.%Y %H:%M:%S",
)

logger = logging.getLogger(__name__)

HALF_LOOP_COLUMNS = (
    "T1_us",
    "V_analytic",
    "V_mc",
    "V_mc_stderr",
    "V_randomvector_zero_corr",
    "V_randomvector_inf_corr",
)
TABLE_S1_COLUMNS = (
    "label",
    "T1_us",
    "Td_us",
    "T2_us",
    "TOF_us",
    "xi",
    "d_um",
    "sigma_min_um",
    "optimal_T2_us",
    "lambda_um",
    "envelope_um",
    "n_fringes",
)
DECAY_COLUMNS = ("epsilon", "correlation", "A1_per_s", "A2_per_s2", "A3_per_s3", "r_squared", "n_points")
DZ_COLUMNS = ("label", "set", "scheme", "dz_um", "dz_over_sigma_z", "V_theory", "V_uncertainty")
DP_COLUMNS = ("label", "set", "scheme", "dv_mm_s", "dv_over_sigma_v", "V_theory", "V_uncertainty")
SCAN_COLUMNS = ("label", "T2_T3_us", "population", "visibility", "phase_rad")
HD_MOMENTUM_COLUMNS = ("dp_hbar_per_um", "dp_over_sigma_p", "V_gaussian", "V_tf", "V_tf_gaussian")
HD_POSITION_COLUMNS = ("dz_um", "dz_over_sigma_z", "V_gaussian", "V_tf")


@dataclass
class RunContext:
    """Everything a subcommand needs: settings, seed, output and scenario selection."""

    settings: SimulationConfig
    seed: int
    output: OutputService
    threads: int
    scenario_path: Optional[Path] = None
    labels: List[str] = field(default_factory=list)
    failed: List[str] = field(default_factory=list)

    def geometry(self, current: float = 1.0) -> ChipGeometry:
        s = self.settings
        return ChipGeometry(
            wire_spacing=units.um(s.wire_spacing_um),
            wire_width=units.um(s.wire_width_um),
            wire_thickness=units.um(s.wire_thickness_um),
            wire_length=units.mm(s.wire_length_mm),
            current=current,
            bias_y=units.gauss(s.bias_G),
        )

    @property
    def field_model(self) -> FieldModel:
        return FieldModel.from_name(self.settings.field_model)

    def scenarios(self, kind: type) -> List[Tuple[int, object]]:
        """(position in the scenario file, sequence) pairs of one kind, filtered by --scenario."""
        selected = [
            (position, seq)
            for position, seq in enumerate(load_scenarios(self.scenario_path))
            if isinstance(seq, kind)
        ]
        if self.labels:
            selected = [(position, seq) for position, seq in selected if seq.label in self.labels]
        logger.info(f"{len(selected)} {kind.__name__} scenarios selected")
        return selected

    def fail(self, label: str, error: Exception) -> None:
        logger.error(f"Scenario {label} failed: {type(error).__name__}: {error}")
        self.failed.append(label)


def _half_loop_noise(ctx: RunContext, seq: HalfLoopSequence, position: int) -> NoiseInjection:
    seed = ctx.seed + position
    if seq.noise is not None:
        return replace(seq.noise, seed=seed)
    return NoiseInjection(rel_current_std=ctx.settings.rel_current_rms, shots=ctx.settings.mc_shots, seed=seed)


def cmd_half_loop(ctx: RunContext) -> None:
    """visibility_vs_T1.csv, table_s1.csv, visibility_decay.csv and one fit report per scenario."""
    s = ctx.settings
    method = VisibilityMethod.from_name(s.visibility_method)
    sequencer = SequencerService()
    phase_space = PhaseSpaceService()
    quantum = QuantumService()
    spec = FluctuationSpec(rel_current_rms=s.rel_current_rms, kappa=s.kappa, z_offset=s.z_offset)

    grid = Grid1D.centered(units.um(s.quantum_z_center_um), dz=units.nm(s.quantum_dz_nm), n_points=s.quantum_points)
    psi0 = quantum.gaussian_wavefunction(grid, grid.center, s.sigma_z)

    scenarios = ctx.scenarios(HalfLoopSequence)
    rows, table_rows = [], []
    for position, seq in scenarios:
        logger.info(f"Half loop {seq.label}: T1={units.to_us(seq.T1):.1f} us")
        try:
            noise = _half_loop_noise(ctx, seq, position)
            result = sequencer.run_half_loop(
                seq,
                noise,
                ctx.geometry(seq.current),
                ctx.field_model,
                omega_stop=s.stop_omega,
                sigma0=(s.sigma_z,) * 3,
                n_points=s.far_field_points,
                pulse_dt=s.pulse_dt,
                method=method,
                threads=ctx.threads,
            )
            ensembles = [
                quantum.random_vector_ensemble(
                    psi0,
                    ctx.geometry(seq.current),
                    seq.T1,
                    s.randomvector_epsilon,
                    correlation,
                    s.randomvector_shots,
                    noise.seed,
                    s.quantum_dt,
                    method,
                    ctx.threads,
                )
                for correlation in (Correlation.Zero, Correlation.Infinite)
            ]
            analytic = NoiseService.visibility_vs_splittime(seq.T1, spec, s.sigma_z_analytic)
            rows.append(
                (
                    units.to_us(seq.T1),
                    analytic,
                    result.visibility.value,
                    result.visibility.uncertainty,
                    ensembles[0].normalized.value,
                    ensembles[1].normalized.value,
                )
            )

            params = HalfLoopAnalytic(
                omega=s.stop_omega,
                t_split=seq.T1,
                t_delay=seq.Td,
                t_stop=seq.T2,
                kick_k=s.kappa * seq.T1,
                sigma_z0=s.sigma_z_analytic,
            )
            figures = phase_space.table_s1_row(params, seq.TOF)
            table_rows.append(
                (
                    seq.label,
                    units.to_us(seq.T1),
                    units.to_us(seq.Td),
                    units.to_us(seq.T2),
                    units.to_us(seq.TOF),
                    figures["xi"],
                    units.to_um(figures["d"]),
                    units.to_um(figures["sigma_min"]),
                    units.to_us(figures["optimal_T2"]),
                    units.to_um(figures.get("wavelength", float("nan"))),
                    units.to_um(figures.get("envelope", float("nan"))),
                    figures.get("n_fringes", float("nan")),
                )
            )
            if result.fit is not None:
                path = ctx.output.output_dir / f"fringe_fit_{seq.label}.json"
                ctx.output.output_dir.mkdir(parents=True, exist_ok=True)
                FringeService.fringe_fit_to_json(result.fit, path)
                ctx.output.register(path)
        except Exception as e:
            ctx.fail(seq.label, e)

    ctx.output.write_csv("visibility_vs_T1.csv", HALF_LOOP_COLUMNS, sorted(rows), visibility_method=str(method))
    ctx.output.write_csv(
        "table_s1.csv",
        TABLE_S1_COLUMNS,
        sorted(table_rows, key=lambda row: (row[1], row[0])),
        stop_frequency_Hz=s.stop_frequency_Hz,
        sigma_z_um=s.sigma_z_analytic_um,
    )

    # Decay curves use the splitting current of the first selected scenario
    decay_rows = []
    if scenarios:
        split_times = [units.us(t) for t in s.randomvector_decay_t1_us]
        geometry = ctx.geometry(scenarios[0].current)
        for epsilon in s.randomvector_decay_epsilons:
            for correlation in (Correlation.Zero, Correlation.Infinite):
                _, decay = quantum.visibility_decay_curve(
                    psi0,
                    geometry,
                    split_times,
                    epsilon,
                    correlation,
                    s.randomvector_shots,
                    ctx.seed,
                    s.quantum_dt,
                    method,
                    ctx.threads,
                )
                if decay is None:
                    coefficients, r_squared, n_points = [float("nan")] * 3, 0.0, 0
                else:
                    coefficients, r_squared, n_points = decay.coefficients, decay.r_squared, decay.n_points
                decay_rows.append((epsilon, str(correlation), *coefficients, r_squared, n_points))
    ctx.output.write_csv("visibility_decay.csv", DECAY_COLUMNS, decay_rows, shots=s.randomvector_shots)


def cmd_full_loop(ctx: RunContext) -> None:
    """visibility_vs_dz.csv, visibility_vs_dp.csv, scan_population.csv, scan fits and trajectories."""
    s = ctx.settings
    dynamics = DynamicsService()
    sequencer = SequencerService(dynamics=dynamics)
    sigma_v = s.sigma_v_mm_s * 1e-3
    options = dict(
        sigma0=(s.sigma_z,) * 3,
        trap_omega0=s.trap_omegas,
        mode=ScaleMode[s.scale_mode],
        pulse_dt=s.pulse_dt,
        delay_dt=s.delay_dt,
    )

    dz_rows, dp_rows, scan_rows = [], [], []
    scan_fits: Dict[str, Dict] = {}
    for _, seq in ctx.scenarios(FullLoopSequence):
        logger.info(f"Full loop {seq.label}: {seq.scheme}, {seq.echo}")
        geometry = ctx.geometry(seq.current)
        try:
            outcome = dynamics.simulate_full_loop(seq, geometry, ctx.field_model, record=True, **options)
            estimate = dynamics.run_full_loop(seq, geometry, ctx.field_model, with_uncertainty=True, **options)
            dynamics.trajectory_csv(
                outcome,
                ctx.output.output_dir / f"trajectory_{seq.label}.csv",
                **ctx.output.metadata(label=seq.label),
            )
            ctx.output.register(ctx.output.output_dir / f"trajectory_{seq.label}.csv")

            common = (seq.label, seq.data_set or "", str(seq.scheme))
            dz_rows.append(
                (*common, units.to_um(outcome.delta_z), outcome.delta_z / s.sigma_z, estimate.value, estimate.uncertainty)
            )
            dv = outcome.delta_p / dynamics.mass
            dp_rows.append((*common, dv * 1e3, dv / sigma_v, estimate.value, estimate.uncertainty))

            totals = SequencerService.scan_totals(seq, units.us(s.scan_half_range_us), s.scan_points)
            points = sequencer.run_full_loop_scan(
                seq, totals, geometry, ctx.field_model, s.analysis_phase, ctx.threads, **options
            )
            scan_rows.extend(
                (seq.label, units.to_us(p.reverse_duration), p.population, p.visibility, p.phase) for p in points
            )
            try:
                fit = FringeService.fit_envelope_sine([(p.reverse_duration, p.population) for p in points])
                scan_fits[seq.label] = fit.to_dict()
                logger.info(f"Scan {seq.label}: peak at {units.to_us(fit.t_peak):.3f} us, R2={fit.r_squared:.3f}")
            except (ValueError, RuntimeError) as e:
                logger.warning(f"Scan {seq.label}: no envelope fit ({e})")
        except Exception as e:
            ctx.fail(seq.label, e)

    extra = dict(sigma_z_um=s.sigma_z_um, sigma_v_mm_s=s.sigma_v_mm_s, field_model=str(ctx.field_model))
    ctx.output.write_csv("visibility_vs_dz.csv", DZ_COLUMNS, sorted(dz_rows), **extra)
    ctx.output.write_csv("visibility_vs_dp.csv", DP_COLUMNS, sorted(dp_rows), **extra)
    ctx.output.write_csv("scan_population.csv", SCAN_COLUMNS, sorted(scan_rows), analysis_phase=s.analysis_phase)
    ctx.output.write_json("scan_fits.json", scan_fits)


def cmd_hd_curves(ctx: RunContext) -> None:
    """V(Δp) and V(Δz) tables for Gaussian and Thomas-Fermi profiles."""
    s = ctx.settings
    hd = HDService()
    z_max = units.um(s.hd_z_max_um)
    sigma = TF_GAUSSIAN_WIDTH_FACTOR * z_max
    sigma_p = hd.momentum_width_for_hd(sigma)
    hbar = hd.constants.hbar

    dp = np.linspace(0.0, s.hd_dp_max_hbar_per_um, s.hd_points) * hbar / units.UM
    momentum_rows = zip(
        dp / hbar * units.UM,
        dp / sigma_p,
        hd.hd_visibility_gaussian(sigma, dp, sigma_p, 0.0),
        hd.hd_visibility_tf_momentum(z_max, dp),
        hd.hd_visibility_tf_momentum_gaussian(z_max, dp),
    )
    dz = np.linspace(0.0, units.um(s.hd_dz_max_um), s.hd_points)
    position_rows = zip(
        units.to_um(dz),
        dz / sigma,
        hd.hd_visibility_gaussian(sigma, 0.0, sigma_p, dz),
        hd.hd_visibility_tf_position(z_max, dz),
    )

    position_factor = tf_position_width_factor()
    momentum_factor = tf_momentum_width_factor()
    extra = dict(
        z_max_um=s.hd_z_max_um,
        gaussian_width_factor=TF_GAUSSIAN_WIDTH_FACTOR,
        tf_position_width_factor=position_factor,
        tf_momentum_width_factor=momentum_factor,
    )
    ctx.output.write_csv("hd_momentum.csv", HD_MOMENTUM_COLUMNS, momentum_rows, **extra)
    ctx.output.write_csv("hd_position.csv", HD_POSITION_COLUMNS, position_rows, **extra)
    print(f"sigma_TF = {position_factor:.4f} z_max (position shift)")
    print(f"sigma_TF = {momentum_factor:.4f} z_max (momentum kick, half-visibility match)")


def cmd_wigner_export(ctx: RunContext) -> None:
    """Wigner density of the configured two-Gaussian superposition."""
    path = ctx.output.output_dir / "wigner_density.csv"
    ctx.output.output_dir.mkdir(parents=True, exist_ok=True)
    WignerService().export_csv(ctx.settings.wigner, path, **ctx.output.metadata())
    ctx.output.register(path)


COMMANDS: Dict[str, Callable[[RunContext], None]] = {
    "half-loop": cmd_half_loop,
    "full-loop": cmd_full_loop,
    "hd-curves": cmd_hd_curves,
    "wigner-export": cmd_wigner_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgisim", description="Stern-Gerlach interferometer simulations and fringe analysis"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS), help="pipeline to run")
    parser.add_argument("--config", type=Path, default=None, help="JSON settings file")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="master seed, overrides the config")
    parser.add_argument("--threads", type=int, default=None, help="cap on parallel shots")
    parser.add_argument(
        "--scenario", action="append", default=[], metavar="LABEL", help="run only this scenario (repeatable)"
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()

    try:
        settings = load_simulation_config(args.config)
    except Exception as e:
        logger.error(f"Invalid config: {e}")
        print(f"Invalid config: {e}", file=sys.stderr)
        return 1

    if args.out is not None:
        config.output_dir = args.out
    threads = config.resolve_threads(args.threads)
    scenario_path = Path(settings.scenario_file) if settings.scenario_file else None

    logger.info("Running startup checks...")
    all_passed, messages = run_all_checks(scenario_path)
    check_message = "\n".join(messages)
    logger.info(f"Startup checks:\n{check_message}")
    if not all_passed:
        print(f"Startup check failed:\n{check_message}", file=sys.stderr)
        return 1

    seed = args.seed if args.seed is not None else settings.seed
    output = OutputService(
        config.output_dir,
        args.command,
        settings.config_hash(),
        seed,
        str(args.config) if args.config else None,
    )
    ctx = RunContext(
        settings=settings,
        seed=seed,
        output=output,
        threads=threads,
        scenario_path=scenario_path,
        labels=list(args.scenario),
    )

    logger.info(f"Running {args.command} with seed {seed} and {threads} threads")
    try:
        COMMANDS[args.command](ctx)
    except Exception as e:
        logger.exception(f"{args.command} aborted")
        print(f"{args.command} failed: {type(e).__name__}: {e}", file=sys.stderr)
        output.write_manifest(time.perf_counter() - started, ctx.failed)
        return 1

    output.write_manifest(time.perf_counter() - started, ctx.failed)
    if ctx.failed:
        print(f"Failed scenarios: {', '.join(ctx.failed)}", file=sys.stderr)
        return 1
    logger.info(f"{args.command} finished in {time.perf_counter() - started:.1f} s")
    return 0


if __name__ == "__main__":
    logger.info("Starting sgisim")
    exit_code = main()
    logger.info(f"Exiting sgisim with code {exit_code}")
    sys.exit(exit_code)
