"""Command-line interface.

Subcommands:
    analyze   full pipeline, human-readable or structured report
    frames    export a frame field as CSV (one header row, one row per node)
    detect    one-line inclined/not verdict with matching exit code
    examples  list the built-in curves

Exit codes: 0 success (and detect: inclined), 1 detect: not inclined,
2 spec or expression errors, 3 geometric degeneracy, 4 detect: inconclusive.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .builtin_curves import BUILTIN_CURVES, get_builtin, is_builtin
from .curve import (
    CurveSpec,
    VanishingSpeedError,
    ensure_unit_speed,
    read_curve_spec,
    realize_curve,
)
from .exprlang import EvaluationDomainError, ExpressionSyntaxError
from .frames import (
    DegenerateCurveError,
    bishop_via_rotation_angle,
    compute_frenet,
    compute_pt_frame,
    random_normal_rotation,
)
from .export import frame_table, write_frame_csv
from .numerics import ToleranceConfig
from .report import analyze_curve

EXIT_OK = 0
EXIT_NOT_INCLINED = 1
EXIT_SPEC_ERROR = 2
EXIT_DEGENERATE = 3
EXIT_INCONCLUSIVE = 4

VERDICT_EXIT = {
    "inclined": EXIT_OK,
    "not_inclined": EXIT_NOT_INCLINED,
    "inconclusive": EXIT_INCONCLUSIVE,
}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def load_spec(ref, args) -> CurveSpec:
    if is_builtin(ref):
        spec = get_builtin(ref)
    else:
        path = Path(ref)
        if not path.exists():
            raise CliError(f"no such built-in or file: {ref}", EXIT_SPEC_ERROR)
        try:
            spec = read_curve_spec(path)
        except (ValueError, ExpressionSyntaxError) as err:
            raise CliError(f"bad curve spec {ref}: {err}", EXIT_SPEC_ERROR)
    updates = {}
    if getattr(args, "samples", None):
        updates["samples"] = args.samples
    if getattr(args, "domain", None):
        parts = args.domain.split(",")
        if len(parts) != 2:
            raise CliError("--domain expects 'low,high'", EXIT_SPEC_ERROR)
        try:
            updates["s_min"], updates["s_max"] = float(parts[0]), float(parts[1])
        except ValueError:
            raise CliError("--domain expects numbers", EXIT_SPEC_ERROR)
    if updates:
        try:
            spec = replace(spec, **updates)
        except ValueError as err:
            raise CliError(str(err), EXIT_SPEC_ERROR)
    return spec


def tolerances_from(args) -> ToleranceConfig:
    kwargs = {}
    if getattr(args, "tol_residual", None):
        kwargs["residual_tol"] = args.tol_residual
    if getattr(args, "tol_constancy", None):
        kwargs["constancy_tol"] = args.tol_constancy
    try:
        return ToleranceConfig(**kwargs)
    except ValueError as err:
        raise CliError(str(err), EXIT_SPEC_ERROR)


def _wrap_pipeline_errors(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ExpressionSyntaxError as err:
        raise CliError(str(err), EXIT_SPEC_ERROR)
    except EvaluationDomainError as err:
        raise CliError(str(err), EXIT_SPEC_ERROR)
    except (DegenerateCurveError, VanishingSpeedError) as err:
        raise CliError(str(err), EXIT_DEGENERATE)


def cmd_analyze(args):
    spec = load_spec(args.spec, args)
    tol = tolerances_from(args)
    pipeline = {}
    report = _wrap_pipeline_errors(analyze_curve, spec, tol,
                                   seed=args.seed, pipeline=pipeline)
    if args.format == "structured":
        print(report.to_structured())
    else:
        print(report.to_text())
    if args.plot_dir:
        from .plotting import save_analysis_figures
        for path in save_analysis_figures(args.plot_dir, report, pipeline):
            print(f"figure: {path}", file=sys.stderr)
    return EXIT_OK


def cmd_frames(args):
    spec = load_spec(args.spec, args)
    tol = tolerances_from(args)

    def build():
        native = realize_curve(spec, tol)
        if args.frame == "frenet":
            field = compute_frenet(native, tol)
            return native, field, None
        if args.frame == "bishop-angle":
            if spec.dimension != 3:
                raise CliError("bishop-angle is defined for 3-dimensional curves",
                               EXIT_SPEC_ERROR)
            frenet = compute_frenet(native, tol)
            field, angles = bishop_via_rotation_angle(native, frenet)
            return native, field, angles
        unit = ensure_unit_speed(native, tol)
        try:
            frenet = compute_frenet(unit, tol)
        except DegenerateCurveError:
            frenet = None
        rotation = None
        if args.seed is not None:
            rotation = random_normal_rotation(spec.dimension - 1, args.seed)
        field = compute_pt_frame(unit, frenet, tol, normal_rotation=rotation)
        return unit, field, None

    curve, field, angles = _wrap_pipeline_errors(build)
    header, matrix = frame_table(curve, field, args.frame, angles)
    write_frame_csv(args.out, header, matrix)
    print(f"wrote {matrix.shape[0]} rows x {len(header)} columns to {args.out}")
    if args.plot:
        from .plotting import save_frame_figure
        target = Path(args.out).with_suffix(".png")
        save_frame_figure(target, curve, field, args.frame, angles)
        print(f"figure: {target}", file=sys.stderr)
    return EXIT_OK


def cmd_detect(args):
    spec = load_spec(args.spec, args)
    tol = tolerances_from(args)

    def run():
        curve = realize_curve(spec, tol)
        rotation = None
        if args.seed is not None:
            rotation = random_normal_rotation(spec.dimension - 1, args.seed)
        from .helix import detect_inclined
        return detect_inclined(curve, tol, normal_rotation=rotation)

    verdict = _wrap_pipeline_errors(run)
    status = verdict.exit_status()
    if status == "inclined":
        axis = ", ".join(f"{x:+.6f}" for x in verdict.axis)
        print(f"{spec.name}: inclined; axis ({axis}); angle {verdict.varphi:.6f} rad")
    elif status == "inconclusive":
        print(f"{spec.name}: inconclusive (criterion {verdict.criterion_residual:.3g}, "
              f"darboux {verdict.darboux_constancy:.3g}, "
              f"oracle {verdict.oracle_score:.3g})")
    else:
        extra = " (planar)" if verdict.degenerate_planar else ""
        print(f"{spec.name}: not inclined{extra} "
              f"(criterion {verdict.criterion_residual:.3g}, "
              f"darboux {verdict.darboux_constancy:.3g})")
    return VERDICT_EXIT[status]


def cmd_examples(args):
    for name, spec in BUILTIN_CURVES.items():
        print(f"{name}: E{spec.dimension}, domain [{spec.s_min:g}, {spec.s_max:g}], "
              f"{spec.samples} samples")
        print(f"    {spec.description}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ptframes",
        description="Frenet and parallel-transport frames for curves in E3/E4, "
                    "with generalized-helix detection")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_tols=True):
        p.add_argument("spec", help="built-in curve name or curve spec file")
        p.add_argument("--samples", type=int, help="override the sample count")
        p.add_argument("--domain", help="override the domain as 'low,high'")
        p.add_argument("--seed", type=int,
                       help="rotate the initial normal frame with this seed "
                            "(verdicts are invariant)")
        if with_tols:
            p.add_argument("--tol-residual", type=float,
                           help="criterion residual tolerance (default 1e-4)")
            p.add_argument("--tol-constancy", type=float,
                           help="constancy tolerance (default 1e-4)")

    p = sub.add_parser("analyze", help="full analysis report")
    common(p)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--plot-dir", help="also render diagnostic figures here")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("frames", help="export a frame field as CSV")
    common(p, with_tols=False)
    p.add_argument("--frame", choices=("frenet", "pt", "bishop-angle"),
                   required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--plot", action="store_true",
                   help="render a companion figure next to the CSV")
    p.set_defaults(fn=cmd_frames)

    p = sub.add_parser("detect", help="one-line inclined-curve verdict")
    common(p)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("examples", help="list built-in curves")
    p.set_defaults(fn=cmd_examples)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
