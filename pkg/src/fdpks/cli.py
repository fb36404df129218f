"""Command-line front end.

Subcommands: ``run`` (simulate and write snapshot/series files),
``converge`` (mesh-refinement study), ``presets`` (list built-ins).
Everything is deterministic: no seeds, fixed iteration orders.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .domain import ConfigError, NumericalError, validate
from .harness import (
    PRESETS,
    convergence_study,
    emit,
    format_convergence_table,
    parse_config,
)
from .integrator import SimulationError, run


def _parse_number(text: str) -> float:
    """Accept plain floats and fractions like 2/15."""
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _parse_time_list(text: str) -> tuple[float, ...]:
    return tuple(_parse_number(tok) for tok in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdpks",
        description="Hybrid finite-difference / sticky-particle chemotaxis simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation and write its outputs")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a config file")
    src.add_argument("--preset", help="built-in preset name (see 'fdpks presets')")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--delta", type=_parse_number, help="override the FD mesh size (accepts a/b)")
    p_run.add_argument("--t-end", type=_parse_number, dest="t_end", help="override the final time")
    p_run.add_argument("--snapshots", type=_parse_time_list, help="override snapshot times (comma separated)")
    p_run.add_argument("--safety", type=_parse_number, help="override the time-step safety factor")
    p_run.add_argument("--no-cutoff", action="store_true", help="disable the diffusion kernel cutoff")
    p_run.add_argument("--max-steps", type=int, dest="max_steps", help="abort after this many steps")

    p_conv = sub.add_parser("converge", help="mesh-refinement convergence study")
    p_conv.add_argument("--preset", default="example1", help="preset to study (default example1)")
    p_conv.add_argument(
        "--deltas",
        default="2/15,2/30,2/60",
        help="comma-separated mesh sizes, each half the previous (fractions allowed)",
    )
    p_conv.add_argument("--t-end", type=_parse_number, dest="t_end", default=2e-4)
    p_conv.add_argument("--out", help="also write the table to this file")

    sub.add_parser("presets", help="list the built-in presets")
    return parser


def _cmd_run(args) -> int:
    cfg = parse_config(args.config if args.config else args.preset)
    overrides = {}
    if args.delta is not None:
        overrides["delta"] = args.delta
    if args.t_end is not None:
        overrides["final_time"] = args.t_end
        overrides["snapshot_times"] = tuple(t for t in cfg.snapshot_times if t <= args.t_end)
    if args.snapshots is not None:
        overrides["snapshot_times"] = args.snapshots
    if args.safety is not None:
        overrides["safety_factor"] = args.safety
    if args.no_cutoff:
        overrides["use_kernel_cutoff"] = False
    if args.max_steps is not None:
        overrides["max_steps"] = args.max_steps
    if overrides:
        cfg = validate(replace(cfg, **overrides))
    try:
        result = run(cfg)
    except SimulationError as err:
        print(f"error: {err}", file=sys.stderr)
        if err.partial is not None:
            emit(err.partial.snapshots, err.partial.series, args.out, cfg=cfg)
            print(f"partial results written to {args.out}", file=sys.stderr)
        return 3
    emit(result.snapshots, result.series, args.out, cfg=cfg)
    counts = " ".join(str(n) for n in result.state.ps.counts())
    print(f"completed t={result.state.t:g} in {len(result.series)} steps; particles per species: {counts}")
    print(f"outputs in {Path(args.out).resolve()}")
    return 0


def _cmd_converge(args) -> int:
    deltas = [_parse_number(tok) for tok in args.deltas.replace(",", " ").split()]
    try:
        rows = convergence_study(args.preset, deltas, t_end=args.t_end)
    except SimulationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    table = format_convergence_table(rows)
    print(table)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(table + "\n")
    return 0


def _cmd_presets() -> int:
    for name in sorted(PRESETS):
        print(f"{name}: {PRESETS[name][1]}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        return _cmd_presets()
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


def cli_main():
    raise SystemExit(main())


if __name__ == "__main__":
    cli_main()
