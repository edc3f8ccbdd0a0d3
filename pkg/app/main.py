import os
import sys
import json
import logging
import argparse
from typing import Callable, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from app import __version__
from app.analytic import landau_zener_rabi, sopt_rabi
from app.errors import ConfigError, DomainError, NumericalError, OrbitalFloquetError, RegimeError
from app.experiment import (
    DecoherenceSpec,
    HistogramSpec,
    ResidualAnalysis,
    SweepSpec,
    analyze_residual,
    decoherence_monte_carlo,
    extract_residual,
    parallel_map,
    ple_slice_doublet,
    ple_sweep,
    resolve_threads,
    time_domain_histogram,
    zero_drive_alpha,
)
from app.floquet import absorption_spectrum, floquet_rabi, solve_floquet
from app.model import excited_x_energy
from app.settings import COMMANDS, RunConfig, load_config
from app.timeseries import TimeSeries

logger = logging.getLogger("app.main")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def check_config(cfg: RunConfig) -> None:
    threads_env = os.getenv("OF_THREADS")
    statics = cfg.strain_drive()
    drives = cfg.drive_values()

    print("== Config Check ==")
    print(f"OF_THREADS: {threads_env if threads_env else 'unset (1 thread)'}")
    print(f"LOG_LEVEL: {os.getenv('LOG_LEVEL', 'INFO')}")
    print(f"command: {cfg.command}")
    print(f"V_E1={statics.V_E1:.4f} GHz, V_E2={statics.V_E2:.4f} GHz, splitting={statics.splitting:.4f} GHz")
    print(f"f_m={statics.f_m} GHz, n={statics.n}, delta0={statics.delta0:.4f} GHz")
    print(f"drive grid: {drives.size} points, E1 in [{drives.min():.4g}, {drives.max():.4g}] GHz")
    data_path, meta_path = cfg.output_paths()
    print(f"output: {data_path} (+ {meta_path})")
    print("resolved config:")
    print(cfg.dump_json(), end="")


# -- commands -------------------------------------------------------------------


def _compare_methods(cfg: RunConfig, threads: int) -> pd.DataFrame:
    def row(e1: float) -> dict:
        point = cfg.strain_drive(e1)
        try:
            lz = landau_zener_rabi(point).omega_r
        except RegimeError:
            lz = np.nan
        return {
            "E1_GHz": e1,
            "omega_R_sopt_GHz": sopt_rabi(point).omega_r,
            "omega_R_monodromy_GHz": floquet_rabi(point, "monodromy"),
            "omega_R_matrix_GHz": floquet_rabi(point, "matrix"),
            "omega_R_lz_GHz": lz,
        }

    return pd.DataFrame(parallel_map(row, list(cfg.drive_values()), threads))


def _sweep_spec(cfg: RunConfig) -> SweepSpec:
    p, g = cfg.physics, cfg.grids
    noise = cfg.noise()
    return SweepSpec(
        laser_detunings=g.detuning.values(),
        drive_amplitudes=cfg.drive_values(),
        evolve_window=g.evolve_window,
        alpha=p.alpha,
        beta=p.beta,
        diffusion=noise if noise.sigma > 0 else None,
        a1_ratio=p.a1_ratio,
        tolerance=g.tolerance,
        time_step=g.time_step,
    )


def _ple_sweep(cfg: RunConfig, threads: int) -> pd.DataFrame:
    pmap = ple_sweep(_sweep_spec(cfg), cfg.strain_drive(0.0), cfg.laser(), cfg.relaxation(), threads)
    drives, detunings = np.meshgrid(pmap.drives, pmap.detunings, indexing="ij")
    return pd.DataFrame({"E1_GHz": drives.ravel(), "detuning_GHz": detunings.ravel(), "pl_arb": pmap.pl.ravel()})


def _rabi_freq(cfg: RunConfig, threads: int) -> pd.DataFrame:
    spec = _sweep_spec(cfg)
    fits = ple_slice_doublet(spec, cfg.strain_drive(0.0), cfg.laser(), cfg.relaxation(), threads)
    monodromy = parallel_map(lambda e1: floquet_rabi(cfg.strain_drive(e1), "monodromy"), list(spec.drive_amplitudes), threads)
    return pd.DataFrame(
        {
            "E1_GHz": spec.drive_amplitudes,
            "center1_GHz": [f.center1 for f in fits],
            "center2_GHz": [f.center2 for f in fits],
            "splitting_GHz": [f.splitting for f in fits],
            "resolved": [f.resolved for f in fits],
            "omega_R_monodromy_GHz": monodromy,
        }
    )


def _rabi_time(cfg: RunConfig, threads: int) -> pd.DataFrame:
    p, g = cfg.physics, cfg.grids
    laser, relax = cfg.laser(), cfg.relaxation()
    spec = HistogramSpec(
        pulse=cfg.pulse(),
        diffusion_draws=p.n_samples,
        diffusion_sigma=p.sigma,
        random_drive_phase=g.random_drive_phase,
        bin_width=g.bin_width,
        time_span=g.time_span,
        normalize=False,
        alpha=p.alpha,
        beta=p.beta,
        seed=cfg.seed,
        tolerance=g.tolerance,
    )
    alpha = zero_drive_alpha(spec, cfg.strain_drive(0.0), laser, relax, threads)
    spec = HistogramSpec(**{**spec.__dict__, "alpha": alpha})
    frames = []
    for e1 in cfg.drive_values():
        hist = time_domain_histogram(spec, cfg.strain_drive(float(e1)), laser, relax, threads)
        try:
            residual = extract_residual(hist)
            analysis = analyze_residual(residual)
        except (NumericalError, DomainError) as e:
            logger.warning("[rabi_time] E1=%.4g: no residual (%s)", e1, e)
            residual = TimeSeries(hist.t, np.full(len(hist), np.nan))
            analysis = ResidualAnalysis(np.nan, np.nan, np.nan)
        frames.append(
            pd.DataFrame(
                {
                    "E1_GHz": float(e1),
                    "t_ns": hist.t,
                    "pl_arb": hist.values,
                    "residual_pct": residual.values,
                    "omega_R_fit_GHz": analysis.omega_r,
                    "T2_Rabi_ns": analysis.t2_rabi,
                    "f_peak_GHz": analysis.peak_frequency,
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def _decoherence(cfg: RunConfig, threads: int) -> pd.DataFrame:
    p = cfg.physics
    spec = DecoherenceSpec(
        noise=cfg.noise(),
        t_grid=cfg.time_grid(),
        drive_grid=cfg.drive_values(),
        delta_scale=p.delta_scale,
        a1_ratio=p.a1_ratio,
        perturb_a1=p.perturb_a1,
    )
    points = decoherence_monte_carlo(spec, cfg.strain_drive(0.0), threads)
    return pd.DataFrame(
        {
            "E1_GHz": [pt.E1 for pt in points],
            "omega_R_GHz": [pt.omega_r for pt in points],
            "T2_Rabi_ns": [pt.t2_rabi for pt in points],
            "window_limited": [pt.window_limited for pt in points],
            "flagged": [pt.flagged for pt in points],
        }
    )


def _floquet_spectrum(cfg: RunConfig, threads: int) -> pd.DataFrame:
    laser = cfg.laser()

    def lines(e1: float) -> pd.DataFrame:
        point = cfg.strain_drive(e1)
        spec = absorption_spectrum(solve_floquet(point), laser.omega_lx, laser.omega_ly, point, cfg.grids.min_line_weight)
        return pd.DataFrame(
            {
                "E1_GHz": e1,
                "frequency_GHz": spec.frequencies,
                "detuning_GHz": spec.frequencies - excited_x_energy(point),
                "weight_arb": spec.weights,
                "branch": spec.branches,
            }
        )

    return pd.concat(parallel_map(lines, list(cfg.drive_values()), threads), ignore_index=True)


RUNNERS: dict[str, Callable[[RunConfig, int], pd.DataFrame]] = {
    "compare-methods": _compare_methods,
    "ple-sweep": _ple_sweep,
    "rabi-freq": _rabi_freq,
    "rabi-time": _rabi_time,
    "decoherence": _decoherence,
    "floquet-spectrum": _floquet_spectrum,
}


# -- output ---------------------------------------------------------------------


def write_outputs(cfg: RunConfig, table: pd.DataFrame) -> tuple[str, str]:
    data_path, meta_path = cfg.output_paths()
    os.makedirs(os.path.dirname(data_path) or ".", exist_ok=True)
    if cfg.output.format == "csv":
        table.to_csv(data_path, index=False, float_format="%.12g", lineterminator="\n")
    else:
        table.to_json(data_path, orient="records", indent=2, double_precision=15)
    with open(meta_path, "w", encoding="utf-8") as f:
        f.write(cfg.dump_json())
    return data_path, meta_path


def _error_record(err: Exception, code: int) -> None:
    record = {"error": type(err).__name__, "message": str(err), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)


def execute(cfg: RunConfig, threads: Optional[int] = None) -> tuple[str, str]:
    """Run the configured command and write its table plus the config sidecar."""
    n = resolve_threads(threads)
    logger.info("[%s] start (threads=%d, seed=%d)", cfg.command, n, cfg.seed)
    table = RUNNERS[cfg.command](cfg, n)
    paths = write_outputs(cfg, table)
    logger.info("[%s] wrote %d rows to %s", cfg.command, len(table), paths[0])
    return paths


def run_command(cfg: RunConfig, threads: Optional[int] = None) -> int:
    """Exit status: 0 on success, 1 for config/domain errors, 2 for numerical failures."""
    try:
        execute(cfg, threads)
    except NumericalError as e:
        _error_record(e, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    except (ConfigError, DomainError, OrbitalFloquetError) as e:
        _error_record(e, EXIT_CONFIG)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbital-floquet", description="Driven orbital-doublet Floquet simulations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd")
    helps = {
        "ple-sweep": "Simulated PLE map over drive amplitude and laser detuning",
        "rabi-time": "Pulsed time-domain PL histograms and percent residuals",
        "rabi-freq": "Autler-Townes splitting from PLE slices vs monodromy Rabi",
        "decoherence": "Monte Carlo T2,Rabi under Gaussian static fields",
        "floquet-spectrum": "Absorption lines from the Floquet states",
        "compare-methods": "Rabi frequency vs drive from SOPT, monodromy, matrix and LZ",
        "check-config": "Validate a run config and print the resolved values",
    }
    for name in (*COMMANDS, "check-config"):
        cmd = sub.add_parser(name, help=helps[name])
        cmd.add_argument("--config", help="JSON or YAML run config (defaults when omitted)")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument("--seed", type=int, help="64-bit master seed")
        cmd.add_argument("--threads", type=int, help="worker threads (falls back to OF_THREADS)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.cmd:
        parser.print_help()
        return EXIT_OK

    overrides = {"seed": args.seed, "out": args.out}
    if args.cmd != "check-config":
        overrides["command"] = args.cmd
    try:
        cfg = load_config(args.config, overrides)
    except OrbitalFloquetError as e:
        _error_record(e, EXIT_CONFIG)
        return EXIT_CONFIG

    if args.cmd == "check-config":
        check_config(cfg)
        return EXIT_OK
    return run_command(cfg, args.threads)


if __name__ == "__main__":
    raise SystemExit(main())
