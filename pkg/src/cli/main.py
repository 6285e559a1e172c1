"""Command-line entry point: `quadres <command> [options]`."""

import argparse
import sys
from pathlib import Path

import numpy as np
import structlog
from pydantic import ValidationError

from src.config import settings
from src.errors import ConfigurationError, NumericalError
from src.fock.blocks import TruncatedOperator
from src.fock.gram import gram_matrix
from src.normal_form.pipeline import reduce_to_normal_form
from src.processing.example import example_case, example_scaling_rows
from src.processing.models import GridSpec, SweepConfig, load_config
from src.processing.projection import spectral_projection
from src.processing.scaling import SCALING_MODELS, distance_scaled_fit, scaling_fit
from src.processing.sweep import SweepRow, resolve_input, sweep
from src.reporting.csv_output import (
    format_float,
    write_json,
    write_normal_form_report,
    write_spectrum_csv,
    write_sweep_csv,
)
from src.reporting.matrices import decode_matrix, dump_blocks
from src.symplectic.forms import QuadraticForm

logger = structlog.get_logger()


def configure_logging() -> None:
    """structlog to stderr so stdout carries only CSV/JSON."""
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(settings.log_level),
        logger_factory=structlog.PrintLoggerFactory(sys.stderr),
    )


def parse_complex(text: str) -> complex:
    """Parse "re,im" (or a bare real) into a complex number."""
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"Expected 're,im', got {text!r}")


def parse_range(text: str) -> range:
    try:
        lo, hi = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected 'lo,hi', got {text!r}")
    return range(lo, hi + 1)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadres",
        description="Resolvent and spectral computations for elliptic quadratic operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p, required=True):
        p.add_argument("--config", type=Path, required=required, help="JSON run configuration")

    def add_point(p):
        p.add_argument("--h", type=float, help="Semiclassical parameter (default: first config h)")
        p.add_argument("--z", type=parse_complex, help="Spectral parameter as 're,im'")

    def add_truncation(p):
        p.add_argument("--max-degree", type=int, help="Truncation cap N_max")
        p.add_argument("--norm", choices=["flat", "gram"], help="Norm for resolvent norms")

    p = sub.add_parser("spectrum", help="List eigenvalues inside a disc")
    add_config(p)
    p.add_argument("--h", type=float, help="Semiclassical parameter (default: first config h)")
    p.add_argument("--radius", type=float, help="Enumeration radius (default: config radius)")
    p.add_argument("--output", type=Path, help="Write CSV here instead of listing on stdout")

    p = sub.add_parser("normal-form", help="Reduce a quadratic form and emit the report")
    add_config(p)
    p.add_argument("--tol", type=float, help="Eigenvalue clustering tolerance")
    p.add_argument("--output", type=Path, help="Report path (default: stdout)")

    p = sub.add_parser("resolvent", help="Truncated resolvent norm at one (h, z)")
    add_config(p)
    add_point(p)
    add_truncation(p)
    p.add_argument("--tol", type=float, help="Stabilization tolerance")
    p.add_argument("--dump-blocks", type=Path, help="Directory for the Fock blocks as text")
    p.add_argument("--output", type=Path, help="JSON path (default: stdout)")

    p = sub.add_parser("sweep", help="Resolvent norms over the configured (h, z) grid")
    add_config(p)
    add_truncation(p)
    p.add_argument("--tol", type=float, help="Stabilization tolerance")
    p.add_argument("--threads", type=int, help="Worker threads")
    p.add_argument("--output", type=Path, help="CSV path (default: config output or stdout)")

    p = sub.add_parser("scaling", help="Fit log(resnorm) against 1/h or (1/h)log(1/h)")
    add_config(p, required=False)
    add_point(p)
    add_truncation(p)
    p.add_argument("--model", choices=[*SCALING_MODELS, "both"], default="both")
    p.add_argument("--example", action="store_true", help="Fit the worked example instead")
    p.add_argument("--m-range", type=parse_range, default=range(10, 31), help="Example degrees")
    p.add_argument("--threads", type=int, help="Worker threads")
    p.add_argument("--output", type=Path, help="JSON path (default: stdout)")

    p = sub.add_parser("example", help="Worked Jordan example against its closed form")
    p.add_argument("--m", type=int, default=4, help="Degree; h = 1/m, z = 1 (default: 4)")
    p.add_argument("--output", type=Path, help="Also write the JSON report here")

    p = sub.add_parser("projection", help="Contour-integral spectral projection")
    add_config(p)
    add_point(p)
    add_truncation(p)
    p.add_argument("--radius", type=float, required=True, help="Contour radius around z")
    p.add_argument("--quad-points", type=int, default=64, help="Trapezoid nodes (default: 64)")
    p.add_argument("--output", type=Path, help="JSON path (default: stdout)")

    return parser


def _pick_h(args, config: SweepConfig) -> float:
    h = args.h if args.h is not None else config.h_values[0]
    if h <= 0 or h < config.h_min:
        raise ConfigurationError(f"h = {h} must be positive and at least h_min = {config.h_min}")
    return h


def _row_dict(row: SweepRow) -> dict:
    return {
        "h": row.h,
        "z": [row.z.real, row.z.imag],
        "N_used": row.N_used,
        "nu_total": row.nu_total,
        "resnorm_flat": row.resnorm_flat,
        "log_resnorm_flat": row.log_resnorm_flat,
        "resnorm_gram": row.resnorm_gram,
        "dist_spec": row.dist_spec,
        "converged": row.converged,
        "out_of_regime": row.out_of_regime,
        "regime": row.regime,
        "error": row.error,
    }


def cmd_spectrum(args) -> int:
    config = load_config(args.config)
    h = _pick_h(args, config)
    R = args.radius if args.radius is not None else config.radius
    if R is None:
        raise ConfigurationError("spectrum needs --radius or a radius in the config")
    spec = resolve_input(config).spectrum(h, R)
    if args.output:
        write_spectrum_csv(spec, path=args.output)
    else:
        for point in spec.points:
            print(
                f"{format_float(point.value.real)} {format_float(point.value.imag)} "
                f"{point.multiplicity}"
            )
    return 0


def cmd_normal_form(args) -> int:
    config = load_config(args.config, {"cluster_tol": args.tol})
    if config.form is None:
        raise ConfigurationError("normal-form needs a config with a `form`")
    C = None
    if config.C is not None:
        C = decode_matrix(config.C, (config.form.n, config.form.n))
    result = reduce_to_normal_form(
        QuadraticForm(n=config.form.n, Q=config.form.matrix()),
        mode=config.jordan_mode,
        C=C,
        cluster_tol=config.cluster_tol,
        multiplicities=config.multiplicities,
    )
    if args.output:
        write_normal_form_report(result, args.output)
    else:
        write_json(result.to_report(), stream=sys.stdout)
    return 0


def cmd_resolvent(args) -> int:
    config = load_config(
        args.config,
        {"N_max": args.max_degree, "norm_mode": args.norm, "stabilization_tol": args.tol},
    )
    h = _pick_h(args, config)
    z = args.z if args.z is not None else config.z_grid.points()[0]
    single = config.model_copy(update={"h_values": [h], "z_grid": GridSpec.single(z)})
    reduced = resolve_input(single)
    row = sweep(single, reduced).rows[0]
    if args.dump_blocks:
        op = TruncatedOperator.build(reduced.M, h, row.N_used)
        gram = None
        if single.norm_mode == "gram":
            gram = gram_matrix(reduced.phi1, h, range(row.N_used))
        written = dump_blocks(op.blocks, args.dump_blocks, gram)
        logger.info("Dumped blocks", directory=str(args.dump_blocks), files=len(written))
    write_json(_row_dict(row), path=args.output, stream=None if args.output else sys.stdout)
    return 0


def cmd_sweep(args) -> int:
    config = load_config(
        args.config,
        {
            "N_max": args.max_degree,
            "norm_mode": args.norm,
            "stabilization_tol": args.tol,
            "threads": args.threads,
        },
    )
    result = sweep(config)
    csv_path = args.output or config.output.csv
    write_sweep_csv(result.rows, path=csv_path, stream=None if csv_path else sys.stdout)
    if config.output.json_path:
        write_json(
            {"metadata": result.metadata, "rows": [_row_dict(r) for r in result.rows]},
            path=config.output.json_path,
        )
    return 0


def cmd_scaling(args) -> int:
    models = SCALING_MODELS if args.model == "both" else (args.model,)
    if args.example:
        rows = example_scaling_rows(args.m_range)
        source = {"example": True, "m": [args.m_range.start, args.m_range.stop - 1]}
    else:
        if args.config is None:
            raise ConfigurationError("scaling needs --config unless --example is given")
        config = load_config(
            args.config,
            {"N_max": args.max_degree, "norm_mode": args.norm, "threads": args.threads},
        )
        z = args.z if args.z is not None else config.z_grid.points()[0]
        rows = sweep(config.model_copy(update={"z_grid": GridSpec.single(z)})).rows
        source = {"example": False, "z": [z.real, z.imag]}
    fits = {model: scaling_fit(rows, model).to_dict() for model in models}
    if any(getattr(r, "resnorm_gram", None) is not None for r in rows):
        fits["gram_dist_inv_h"] = distance_scaled_fit(rows).to_dict()
    output = {"source": source, "fits": fits}
    write_json(output, path=args.output, stream=None if args.output else sys.stdout)
    return 0


def cmd_example(args) -> int:
    report = example_case(args.m)
    print(f"m = {report.m}, h = {report.h:.6g}, z = 1")
    print(f"squared norm: {report.squared_norm:.12g}")
    print(f"closed form:  {report.closed_form}")
    print(f"relative error: {report.relative_error:.3e}")
    print(f"norm >= m!: {'yes' if report.exceeds_factorial else 'no'}")
    print("PASS" if report.passed else "FAIL")
    if args.output:
        write_json(report.to_dict(), path=args.output)
    return 0 if report.passed else 2


def cmd_projection(args) -> int:
    config = load_config(args.config, {"N_max": args.max_degree, "norm_mode": args.norm})
    h = _pick_h(args, config)
    if args.z is None:
        raise ConfigurationError("projection needs --z for the contour center")
    reduced = resolve_input(config)
    op = TruncatedOperator.build(reduced.M, h, config.N_max)
    gram = None
    if config.norm_mode == "gram":
        gram = gram_matrix(reduced.phi1, h, range(config.N_max))
    center = reduced.to_reduced(args.z)
    result = spectral_projection(op, center, args.radius, args.quad_points, gram)
    write_json(
        {
            "h": h,
            "z0": [args.z.real, args.z.imag],
            "radius": args.radius,
            "N": config.N_max,
            "norm_mode": config.norm_mode,
            "norm": result.norm,
            "idempotency": result.idempotency,
            "rank": result.rank,
            "quad_points": result.quad_points,
            "quadrature_change": result.quadrature_change,
        },
        path=args.output,
        stream=None if args.output else sys.stdout,
    )
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "normal-form": cmd_normal_form,
    "resolvent": cmd_resolvent,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "example": cmd_example,
    "projection": cmd_projection,
}


def main(argv: list[str] | None = None) -> int:
    """Run one command; returns 0 on success, 1 on bad input, 2 on numerical failure."""
    try:
        args = build_arg_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors are input errors
        return 0 if exc.code in (0, None) else 1
    configure_logging()
    logger.debug("Running command", command=args.command)
    try:
        return COMMANDS[args.command](args)
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigurationError, ValidationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
