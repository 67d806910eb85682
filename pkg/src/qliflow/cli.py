"""Command-line interface.

Subcommands
-----------
run <config>          Execute an experiment described by a config file.
preset <name>         Print a ready-made config (--scale paper|desk).
fit <trace.csv>       Power-law fit of an information-flow trace.
velocity <heatmap>    Light-cone front velocity from a heatmap CSV.
verdict <trace.csv>   Growth-vs-saturation classification of the integral.

Exit codes: 0 success, 1 error, 2 completed with warnings.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import (
    InsufficientDataError,
    chaos_metric,
    light_cone_velocity,
    powerlaw_fit,
)
from .config import (
    PRESET_NAMES,
    ConfigError,
    parse_config,
    preset,
    serialize_config,
)
from .ed import CapacityError
from .model import velocity_table
from .qlif import read_heatmap_csv, read_trace_csv
from .runner import FRONT_THRESHOLD, run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_WARNINGS = 2


def _print_record(fields: dict) -> None:
    for key, value in fields.items():
        if isinstance(value, float):
            value = repr(value)
        print(f"{key} = {value}")


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    manifest = run(cfg, out_root=args.out_root)
    print(f"run dir: {manifest.run_dir}")
    print(f"manifest hash: {manifest.hash}")
    for path in manifest.outputs:
        print(f"wrote: {path}")
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_WARNINGS if manifest.warnings else EXIT_OK


def _cmd_preset(args) -> int:
    cfg = preset(args.name, args.scale)
    text = serialize_config(cfg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote: {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_fit(args) -> int:
    trace = read_trace_csv(args.trace)
    window = None
    if args.window:
        try:
            lo, hi = (float(tok) for tok in args.window.split(","))
        except ValueError:
            raise ConfigError(
                f"--window: expected 'lo,hi', got {args.window!r}") from None
        window = (lo, hi)
    fit = powerlaw_fit(trace, window=window, floor=args.floor)
    _print_record({
        "alpha": fit.alpha, "prefactor": fit.prefactor,
        "r_squared": fit.r_squared,
        "window.lo": fit.window[0], "window.hi": fit.window[1],
        "n_points": fit.n_points,
        "floor_excluded": fit.floor_excluded_count,
    })
    return EXIT_OK


def _cmd_velocity(args) -> int:
    heatmap = read_heatmap_csv(args.heatmap)
    fit = light_cone_velocity(heatmap, args.threshold)
    fields = {"velocity": fit.velocity, "r_squared": fit.r_squared,
              "threshold": fit.threshold}
    for d, t_star in sorted(fit.arrivals.items()):
        fields[f"arrival.d{d}"] = t_star
    _print_record(fields)
    return EXIT_OK


def _cmd_verdict(args) -> int:
    trace = read_trace_csv(args.trace)
    t_scr = args.t_scr if args.t_scr is not None else velocity_table(trace.spec).t_scr
    verdict = chaos_metric(trace.times, trace.integral, t_scr)
    _print_record({
        "verdict": verdict.verdict,
        "growth_factor": verdict.growth_factor,
        "reference_mean": verdict.reference_mean,
        "tail_mean": verdict.tail_mean,
        "t_scr": t_scr,
    })
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qliflow",
        description="Information flow and operator spreading in spin chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment config")
    p.add_argument("config", help="path to a key=value config file")
    p.add_argument("--out-root", default=None,
                   help="output root (default: $QLIFLOW_OUT or '.')")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("preset", help="print a ready-made config")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--scale", choices=("paper", "desk"), default="desk")
    p.add_argument("--out", default=None, help="write to a file instead of stdout")
    p.set_defaults(func=_cmd_preset)

    p = sub.add_parser("fit", help="power-law fit of a trace CSV")
    p.add_argument("trace")
    p.add_argument("--window", default=None, help="fit window 'lo,hi'")
    p.add_argument("--floor", type=float, default=1e-14,
                   help="ignore magnitudes at or below this floor")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("velocity", help="light-cone velocity from a heatmap CSV")
    p.add_argument("heatmap")
    p.add_argument("--threshold", type=float, default=FRONT_THRESHOLD)
    p.set_defaults(func=_cmd_velocity)

    p = sub.add_parser("verdict", help="growth-vs-saturation classification")
    p.add_argument("trace")
    p.add_argument("--t-scr", type=float, default=None,
                   help="override the scrambling-time split point")
    p.set_defaults(func=_cmd_verdict)
    return parser


def main(argv=None) -> int:
    # argparse exits 2 on usage errors; reserve 2 for completed-with-warnings.
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc} (reduce model.L or switch to the mps engine)",
              file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, InsufficientDataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
