#!/usr/bin/env python3
"""
Command-line front end for resunmix.

Subcommands:
    synth        Generate a synthetic scene (i1 or i2 preset) with ground truth
    unmix        Unmix an HSIB cube with known endmembers (nusal, rusal or linear)
    eval         Score an unmixing run against the observed cube and optional truth
    export-maps  Write per-endmember abundance PGMs and the mean interaction profile

Exit codes: 0 on success, 2 on usage or format errors, 3 on numeric failures.
"""

import argparse
import logging
import math
import sys
from typing import Dict, Optional, Sequence

import numpy as np

from resunmix.config import UnmixConfig, get_config, load_config, reset_config, set_config
from resunmix.unmixing import formats
from resunmix.unmixing.dictionaries import build_interaction_matrix
from resunmix.unmixing.metrics import evaluate, mean_interaction_profile, residual_energy_map
from resunmix.unmixing.models import (
    AbundanceMatrix,
    EndmemberMatrix,
    GridSearchResult,
    LinearMethod,
    NusalMethod,
    ResidualCoefficients,
    RusalMethod,
    SolverOptions,
    UnmixSpec,
)
from resunmix.unmixing.synth import PRESETS, build_scene, load_endmembers, preset_scene
from resunmix.unmixing.unmixers import grid_search, unmix
from resunmix.unmixing.validators import validate_geometry

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Output file names
CUBE_FILE = "cube.hsib"
LABELS_FILE = "labels.pgm"
ABUNDANCES_FILE = "abundances.csv"
ENDMEMBERS_FILE = "endmembers.csv"
MANIFEST_FILE = "manifest.txt"
RESIDUAL_COEFFS_FILE = "residual_coeffs.csv"
RECONSTRUCTION_FILE = "reconstruction.hsib"
RESIDUAL_MAP_FILE = "residual_energy.pgm"
HISTORY_FILE = "history.csv"
GRID_FILE = "grid.csv"
METRICS_FILE = "metrics.txt"
PER_CLASS_FILE = "per_class_rmse.csv"
MAPS_SIDECAR_FILE = "maps.txt"
PROFILE_FILE = "interaction_profile.csv"


def log_command(name: str, **params):
    """Log a subcommand invocation with its parameters."""
    shown = {k: v for k, v in params.items() if v is not None}
    logger.info(f"resunmix {name}({', '.join(f'{k}={v}' for k, v in shown.items())})")


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace, config: UnmixConfig) -> int:
    """Generate a preset scene and write cube, labels, abundances, endmembers and manifest."""
    log_command("synth", preset=args.preset, seed=args.seed, out_dir=args.out_dir)
    endmembers = load_endmembers(args.endmembers_file) if args.endmembers_file else None
    spec = preset_scene(
        args.preset,
        n_endmembers=endmembers.n_endmembers if endmembers else args.endmembers,
        rows=args.rows,
        cols=args.cols,
        n_bands=endmembers.n_bands if endmembers else args.bands,
        snr_db=args.snr_db,
        seed=args.seed,
        beta=args.beta,
        config=config,
    )
    truth = build_scene(spec, endmembers=endmembers, config=config)

    out_dir = formats.ensure_dir(args.out_dir)
    formats.write_cube(out_dir / CUBE_FILE, truth.noisy)
    formats.write_pgm(out_dir / LABELS_FILE, truth.labels.astype(np.uint8))
    formats.write_matrix_csv(out_dir / ABUNDANCES_FILE, truth.abundances.data)
    formats.write_matrix_csv(out_dir / ENDMEMBERS_FILE, truth.endmembers.data)

    input_hash = formats.hash_files([args.endmembers_file]) if args.endmembers_file else "none"
    noise_energy = float(np.sum((truth.noisy.data - truth.clean.data) ** 2))
    clean_energy = float(np.sum(truth.clean.data**2))
    realized = 10 * math.log10(clean_energy / noise_energy) if noise_energy > 0 else math.inf
    formats.write_manifest(
        out_dir / MANIFEST_FILE,
        {
            "command": "synth",
            "preset": args.preset,
            "rows": spec.rows,
            "cols": spec.cols,
            "bands": spec.n_bands,
            "endmembers": spec.n_endmembers,
            "classes": ",".join(spec.class_names),
            "beta": spec.beta,
            "snr_db": spec.snr_db,
            "seed": spec.seed,
            "potts_sweeps": config.potts_sweeps,
            "endmembers_source": args.endmembers_file or "generated",
            "input_hash": input_hash,
            "sigma2": truth.sigma2,
            "realized_snr_db": realized,
        },
    )
    logger.info(f"Wrote scene to {out_dir} (realized SNR {realized:.2f} dB)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# unmix
# ---------------------------------------------------------------------------


def _method_from_args(args: argparse.Namespace, config: UnmixConfig):
    if args.method == "nusal":
        return NusalMethod(order=args.order)
    if args.method == "rusal":
        dct_dim = config.rusal_dct_dim if args.dct_dim is None else args.dct_dim
        return RusalMethod(dct_dim=dct_dim)
    return LinearMethod()


def _stopping_from_args(args: argparse.Namespace) -> Optional[bool]:
    if args.require_both:
        return True
    if args.either_residual:
        return False
    return None


def _solver_from_args(args: argparse.Namespace, config: UnmixConfig) -> SolverOptions:
    return SolverOptions.from_config(
        config,
        mu0=args.mu0,
        tol=args.tol,
        max_iter=args.max_iter,
        adapt=False if args.no_adapt else None,
        require_both=_stopping_from_args(args),
        record_history=args.history,
    )


def cmd_unmix(args: argparse.Namespace, config: UnmixConfig) -> int:
    """Unmix a cube and write estimates, reconstruction, residual map and manifest."""
    log_command(
        "unmix", method=args.method, cube=args.cube, endmembers=args.endmembers, grid=args.grid
    )
    Y = formats.read_cube(args.cube)
    M = EndmemberMatrix(data=formats.read_matrix_csv(args.endmembers))
    method = _method_from_args(args, config)
    solver = _solver_from_args(args, config)
    inputs = [args.cube, args.endmembers]

    search: Optional[GridSearchResult] = None
    if args.grid:
        truth = None
        if args.truth:
            truth = AbundanceMatrix(data=formats.read_matrix_csv(args.truth))
            inputs.append(args.truth)
        search = grid_search(Y, M, method, truth=truth, solver=solver, config=config)
        result = search.best
    else:
        spec = UnmixSpec.for_method(
            method, tau1=args.tau1, tau2=args.tau2, solver=solver, config=config
        )
        result = unmix(Y, M, spec, config=config)

    out_dir = formats.ensure_dir(args.out_dir)
    formats.write_matrix_csv(out_dir / ABUNDANCES_FILE, result.abundances.data)
    if result.residual_coeffs is not None:
        formats.write_matrix_csv(out_dir / RESIDUAL_COEFFS_FILE, result.residual_coeffs.data)
    formats.write_cube(out_dir / RECONSTRUCTION_FILE, result.reconstruction)
    energy = residual_energy_map(Y, M, result.abundances)
    gray, vmin, vmax, degenerate = formats.to_gray(energy)
    formats.write_pgm(out_dir / RESIDUAL_MAP_FILE, gray)
    if args.history:
        formats.write_history_csv(out_dir / HISTORY_FILE, result.report)
    if search is not None:
        formats.write_rows_csv(
            out_dir / GRID_FILE,
            ("tau1", "tau2", search.criterion, "converged"),
            ((p.tau1, p.tau2, p.score, p.converged) for p in search.points),
        )

    spec = result.spec
    report = result.report
    residual_dim = 0 if result.residual_coeffs is None else result.residual_coeffs.data.shape[0]
    manifest: Dict[str, object] = {"command": "unmix", "method": spec.method.kind}
    if isinstance(spec.method, NusalMethod):
        manifest["K"] = spec.method.order
    elif isinstance(spec.method, RusalMethod):
        manifest["D"] = spec.method.dct_dim
    manifest.update(
        {
            "tau1": spec.tau1,
            "tau2": spec.tau2,
            "mu0": spec.solver.mu0,
            "tol": spec.solver.tol,
            "max_iter": spec.solver.max_iter,
            "adapt": spec.solver.adapt,
            "adapt_ratio": spec.solver.adapt_ratio,
            "adapt_factor": spec.solver.adapt_factor,
            "adapt_period": spec.solver.adapt_period,
            "adapt_max_changes": spec.solver.adapt_max_changes,
            "require_both": spec.solver.require_both,
            "abundance_cleanup_tol": config.abundance_cleanup_tol,
            "cube": args.cube,
            "endmembers": args.endmembers,
            "seed": "n/a",
            "input_hash": formats.hash_files(inputs),
            "bands": Y.n_bands,
            "rows": Y.rows,
            "cols": Y.cols,
            "R": M.n_endmembers,
            "residual_dim": residual_dim,
            "grid": "none" if search is None else ",".join(str(t) for t in config.tau_grid),
        }
    )
    if search is not None:
        manifest["grid_criterion"] = search.criterion
        manifest["grid_score"] = search.best_point.score
    manifest.update(
        {
            "converged": report.converged,
            "iterations": report.iterations,
            "primal_residual": report.primal_residual,
            "dual_residual": report.dual_residual,
            "threshold": report.threshold,
            "objective": report.objective,
            "max_violation": report.max_violation,
            "final_mu": report.mu,
            "penalty_changes": report.penalty_changes,
            "residual_map_min": vmin,
            "residual_map_max": vmax,
            "residual_map_degenerate": degenerate,
            "runtime_s": report.runtime_s,
        }
    )
    formats.write_manifest(out_dir / MANIFEST_FILE, manifest)
    logger.info(
        f"Wrote {spec.method.kind} results to {out_dir} "
        f"(converged={report.converged}, iterations={report.iterations})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace, config: UnmixConfig) -> int:
    """Compute metrics and write metrics.txt plus per-class RMSE rows."""
    log_command("eval", abundances=args.abundances, truth=args.truth, out_dir=args.out_dir)
    Y = formats.read_cube(args.cube)
    Y_hat = formats.read_cube(args.reconstruction)
    A_est = formats.read_matrix_csv(args.abundances)
    A_true = formats.read_matrix_csv(args.truth) if args.truth else None

    labels = None
    if args.labels:
        labels = formats.read_pgm(args.labels).astype(np.int64)
        validate_geometry(labels.shape[0], labels.shape[1], Y.n_pixels)
    class_names = None
    if args.scene_manifest:
        classes = formats.read_manifest(args.scene_manifest).get("classes", "")
        class_names = [c for c in classes.split(",") if c] or None
    runtime_s = 0.0
    if args.run_manifest:
        runtime_s = float(formats.read_manifest(args.run_manifest).get("runtime_s", 0.0))

    metrics = evaluate(
        Y,
        Y_hat,
        A_est,
        A_true=A_true,
        labels=labels,
        class_names=class_names,
        runtime_s=runtime_s,
    )
    values: Dict[str, object] = {}
    if metrics.armse is not None:
        values["armse"] = metrics.armse
    values.update(
        {
            "re": metrics.re,
            "sam_rad": metrics.sam_rad,
            "sam_deg": metrics.sam_deg,
            "runtime_s": metrics.runtime_s,
        }
    )

    out_dir = formats.ensure_dir(args.out_dir)
    formats.write_manifest(out_dir / METRICS_FILE, values)
    if metrics.per_class_rmse:
        formats.write_rows_csv(
            out_dir / PER_CLASS_FILE, ("class", "rmse"), metrics.per_class_rmse.items()
        )
    for key, value in values.items():
        print(f"{key}={formats.format_value(value)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# export-maps
# ---------------------------------------------------------------------------


def cmd_export_maps(args: argparse.Namespace, config: UnmixConfig) -> int:
    """Write one PGM per abundance map, a min/max sidecar and the interaction profile."""
    log_command("export-maps", abundances=args.abundances, coeffs=args.coeffs, out_dir=args.out_dir)
    A = formats.read_matrix_csv(args.abundances)
    rows, cols = validate_geometry(args.rows, args.cols, A.shape[1])

    out_dir = formats.ensure_dir(args.out_dir)
    sidecar: Dict[str, object] = {"rows": rows, "cols": cols, "maps": A.shape[0]}
    for r in range(A.shape[0]):
        gray, vmin, vmax, degenerate = formats.to_gray(A[r].reshape(rows, cols))
        name = f"abundance_{r + 1}.pgm"
        formats.write_pgm(out_dir / name, gray)
        sidecar[f"{name}.min"] = vmin
        sidecar[f"{name}.max"] = vmax
        sidecar[f"{name}.degenerate"] = degenerate
        if degenerate:
            logger.warning(f"Map {name} has a constant value {vmin}, written as uniform gray")
    formats.write_manifest(out_dir / MAPS_SIDECAR_FILE, sidecar)

    if args.coeffs:
        if not args.endmembers:
            raise ValueError("--coeffs needs --endmembers to label the interaction terms")
        M = EndmemberMatrix(data=formats.read_matrix_csv(args.endmembers))
        dictionary = build_interaction_matrix(M, args.order, config)
        gamma = ResidualCoefficients(data=formats.read_matrix_csv(args.coeffs), kind="NL")
        if gamma.data.shape[1] != A.shape[1]:
            raise ValueError(
                f"coefficients cover {gamma.data.shape[1]} pixels, abundances {A.shape[1]}"
            )
        profile = mean_interaction_profile(gamma, dictionary)
        formats.write_rows_csv(
            out_dir / PROFILE_FILE,
            ("index", "label", "mean"),
            (
                (d, label, float(value))
                for d, (label, value) in enumerate(zip(dictionary.labels, profile))
            ),
        )
    logger.info(f"Wrote {A.shape[0]} abundance maps to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def _add_solver_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("solver")
    group.add_argument("--mu0", type=float, help="initial ADMM penalty")
    group.add_argument("--tol", type=float, help="stopping tolerance")
    group.add_argument("--max-iter", type=int, help="iteration cap")
    group.add_argument("--no-adapt", action="store_true", help="keep mu fixed")
    stopping = group.add_mutually_exclusive_group()
    stopping.add_argument(
        "--require-both",
        action="store_true",
        help="stop only when both primal and dual residuals are below threshold",
    )
    stopping.add_argument(
        "--either-residual",
        action="store_true",
        help="stop as soon as the primal or the dual residual is below threshold",
    )
    group.add_argument("--history", action="store_true", help=f"write {HISTORY_FILE}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resunmix", description="Supervised hyperspectral unmixing with residual components"
    )
    parser.add_argument("--config", help="dotenv file of UNMIX_* settings")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic scene")
    synth.add_argument("--preset", choices=PRESETS, default="i1")
    synth.add_argument("--rows", type=int, default=100)
    synth.add_argument("--cols", type=int, default=100)
    synth.add_argument("--bands", type=int, default=207)
    synth.add_argument("--endmembers", type=int, default=3, help="number of endmembers R")
    synth.add_argument(
        "--endmembers-file", help="L x R endmember CSV to use instead of generated spectra"
    )
    synth.add_argument("--snr-db", type=float, default=25.0)
    synth.add_argument("--beta", type=float, help="Potts granularity (default from config)")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out-dir", required=True)
    synth.set_defaults(handler=cmd_synth)

    un = sub.add_parser("unmix", help="unmix a cube with known endmembers")
    un.add_argument("--method", choices=("nusal", "rusal", "linear"), required=True)
    un.add_argument("--order", type=int, default=2, help="maximum interaction order K (nusal)")
    un.add_argument("--dct-dim", type=int, help="number of DCT vectors D (rusal)")
    un.add_argument("--tau1", type=float, help="l1 weight (default per method)")
    un.add_argument("--tau2", type=float, help="l21 weight (default per method)")
    un.add_argument("--cube", required=True, help="HSIB cube")
    un.add_argument("--endmembers", required=True, help="L x R endmember CSV")
    un.add_argument("--out-dir", required=True)
    un.add_argument("--grid", action="store_true", help="search tau1 x tau2 over the config grid")
    un.add_argument("--truth", help="true abundances CSV used by --grid")
    _add_solver_flags(un)
    un.set_defaults(handler=cmd_unmix)

    ev = sub.add_parser("eval", help="score an unmixing run")
    ev.add_argument("--cube", required=True, help="observed HSIB cube")
    ev.add_argument("--reconstruction", required=True, help="reconstructed HSIB cube")
    ev.add_argument("--abundances", required=True, help="estimated abundances CSV")
    ev.add_argument("--truth", help="true abundances CSV")
    ev.add_argument("--labels", help="class label PGM for per-class RMSE")
    ev.add_argument("--scene-manifest", help="synth manifest providing class names")
    ev.add_argument("--run-manifest", help="unmix manifest providing runtime_s")
    ev.add_argument("--out-dir", required=True)
    ev.set_defaults(handler=cmd_eval)

    ex = sub.add_parser("export-maps", help="export abundance maps and interaction profile")
    ex.add_argument("--abundances", required=True)
    ex.add_argument("--rows", type=int, required=True)
    ex.add_argument("--cols", type=int, required=True)
    ex.add_argument("--coeffs", help="NL coefficient CSV of a nusal run")
    ex.add_argument("--endmembers", help="endmember CSV of the nusal run")
    ex.add_argument("--order", type=int, default=2)
    ex.add_argument("--out-dir", required=True)
    ex.set_defaults(handler=cmd_export_maps)

    return parser


def configure_logging(verbose: bool = False):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    configure_logging(args.verbose)
    custom_config = False
    try:
        if args.config:
            set_config(load_config(args.config))
            custom_config = True
        return args.handler(args, get_config())
    except (ValueError, OSError, MemoryError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError, RuntimeError) as e:
        logger.error(f"{args.command} failed with a numeric error: {e}")
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        if custom_config:
            reset_config()


if __name__ == "__main__":
    sys.exit(main())
