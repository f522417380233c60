"""Command-line harness: ``plan``, ``plot``, ``verify-soc`` and ``validate``.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .experiment import (ConfigError, ExperimentSpec, parse_seeds, run_experiment,
                         soc_report_for, validate_roadmap, write_soc_report)
from .formats import FormatError, read_roadmap_csv, read_solution
from .svg import PortraitStyle, render_phase_portrait

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _spec_flags() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("--seed", type=int, metavar="N", help="run a single seed")
    p.add_argument("--seeds", metavar="A..B", help="seed range A..B or comma list")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--interp", choices=("bezier", "soc1", "quad"))
    p.add_argument("--bezier-T", type=float, dest="bezier_T", metavar="SECONDS")
    p.add_argument("--tau-max", type=float, dest="tau_max", metavar="NM")
    p.add_argument("--budget", type=int, metavar="N", help="RRT extensions per seed")
    p.add_argument("--quiet", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kinoplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    flags = _spec_flags()
    sub.add_parser("plan", parents=[flags], help="run the seeded planning experiment")
    sub.add_parser("verify-soc", parents=[flags], help="numeric SOC check of the interpolator")

    plot = sub.add_parser("plot", help="phase-portrait SVG of a roadmap")
    plot.add_argument("roadmap", help="roadmap CSV or a seed output directory")
    plot.add_argument("--solution", metavar="PATH", help="solution dump to overlay")
    plot.add_argument("--out", metavar="FILE", help="SVG path (default: stdout)")
    plot.add_argument("--title")
    plot.add_argument("--no-edges", action="store_true")

    val = sub.add_parser("validate", help="re-check roadmap tree invariants")
    val.add_argument("paths", nargs="+", help="roadmap CSVs or experiment directories")
    val.add_argument("--recheck", action="store_true",
                     help="re-steer every edge and re-check torque admissibility")
    val.add_argument("--checks", type=int, metavar="N", help="admissibility samples per edge")
    val.add_argument("--quiet", action="store_true")
    return parser


def resolve_spec(args) -> ExperimentSpec:
    overrides = {}
    for name in ("out", "interp", "bezier_T", "tau_max", "budget"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.seed is not None and args.seeds is not None:
        raise UsageError("--seed and --seeds are mutually exclusive")
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    elif args.seeds is not None:
        overrides["seeds"] = parse_seeds(args.seeds)
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    return ExperimentSpec.from_text(text, overrides)


def _cmd_plan(args, out) -> int:
    spec = resolve_spec(args)
    rows = run_experiment(spec, quiet=args.quiet)
    if not args.quiet:
        print(f"{'seed':>6} {'status':<17} {'extensions':>10} {'nodes':>7} {'time[s]':>8}", file=out)
        for r in rows:
            print(f"{r.seed:>6} {r.status:<17} {r.extensions:>10} {r.nodes:>7} {r.wall_time:>8.2f}",
                  file=out)
        solved = sum(r.status == "solved" for r in rows)
        print(f"solved {solved}/{len(rows)}; outputs in {spec.out}", file=out)
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    spec = resolve_spec(args)
    report = soc_report_for(spec)
    write_soc_report(spec.out, report, stem=f"soc_report_{spec.interp}")
    if not args.quiet:
        out.write(report.to_text())
    return EXIT_OK


def _cmd_plot(args, out) -> int:
    path, solution_path = args.roadmap, args.solution
    if os.path.isdir(path):
        candidate = os.path.join(path, "solution.json")
        if solution_path is None and os.path.exists(candidate):
            solution_path = candidate
        path = os.path.join(path, "roadmap.csv")
    table = read_roadmap_csv(path)
    solution = read_solution(solution_path)[0] if solution_path else None
    svg = render_phase_portrait(table, solution, PortraitStyle(draw_edges=not args.no_edges),
                                title=args.title)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(svg)
    else:
        out.write(svg)
    return EXIT_OK


def _roadmap_files(paths):
    for p in paths:
        if os.path.isdir(p):
            found = sorted(os.path.join(root, "roadmap.csv") for root, _, files in os.walk(p)
                           if "roadmap.csv" in files)
            if not found:
                raise FileNotFoundError(f"no roadmap.csv under {p}")
            yield from found
        else:
            yield p


def _cmd_validate(args, out) -> int:
    failed = False
    for path in _roadmap_files(args.paths):
        table = read_roadmap_csv(path)
        problems = validate_roadmap(table, recheck=args.recheck, checks=args.checks)
        failed |= bool(problems)
        if problems:
            for msg in problems:
                print(f"{path}: INVALID: {msg}", file=out)
        elif not args.quiet:
            print(f"{path}: ok ({len(table)} nodes)", file=out)
    return EXIT_INVARIANT if failed else EXIT_OK


COMMANDS = {"plan": _cmd_plan, "verify-soc": _cmd_verify, "plot": _cmd_plot,
            "validate": _cmd_validate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                            format="%(message)s")
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssertionError, RuntimeError, FloatingPointError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
