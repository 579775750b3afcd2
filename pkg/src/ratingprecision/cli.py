"""Command-line front end.

Subcommands::

    simulate   run a simulation study and write an archive
    curves     measure means and CI half widths per (sigma, p) as CSV
    heatmap    rejection-ratio heat map for one comparison method as CSV
    mae        heat-map MAE against the ideal map
    measure    l, g and a for one ratings CSV
    compare    compare two ratings CSVs
    report     measure and compare a list of datasets

Usage errors exit with status 2, runtime failures with status 1.
"""
from __future__ import annotations

import argparse
import logging
import secrets
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .compare import DEFAULT_ALPHA, compare
from .core import COMPARISON_METHODS
from .dataio import (
    DatasetDescriptor,
    curves_to_csv,
    heatmap_to_csv,
    measure_all,
    precision_report,
    read_archive,
    read_ratings_csv,
    write_archive,
    write_report,
)
from .generator import SCENARIOS, BiasScenario
from .sim import PRESETS, curves, heatmap, mae_vs_ideal, run_study

PROG = "ratingprecision"
log = logging.getLogger(__name__)


def _float_list(text: str) -> tuple:
    try:
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be >= 0")
    return v


def _alpha(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {v}")
    return v


def _dataset(text: str) -> DatasetDescriptor:
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return DatasetDescriptor(name=name, path=Path(path))


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Precision measures for subjective rating experiments and their simulation study.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def seeded(p):
        p.add_argument("--seed", type=_seed, default=None,
                       help="random seed; a fresh one is drawn and printed to stderr if omitted")

    def jobs(p):
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (output does not depend on it)")

    def alpha(p):
        p.add_argument("--alpha", type=_alpha, default=DEFAULT_ALPHA, help="significance level")

    def pairs(p):
        p.add_argument("--pairs", type=_positive_int, default=None,
                       help="experiment pairs drawn per heat-map cell; "
                            "None takes the preset value (full 2000, reduced 500)")
        p.add_argument("--preset", choices=sorted(PRESETS), default="full", help="selects the default --pairs")

    p = sub.add_parser("simulate", help="run a simulation study and write an archive", formatter_class=fmt)
    p.add_argument("--scenario", choices=SCENARIOS, default="none", help="subject bias scenario")
    p.add_argument("--preset", choices=sorted(PRESETS), default="full", help="grid and repetition defaults")
    p.add_argument("--sigmas", type=_float_list, default=None,
                   help="comma-separated user uncertainties; None takes the preset grid")
    p.add_argument("--ps", type=_float_list, default=None,
                   help="comma-separated no-bias probabilities; None takes the preset grid")
    p.add_argument("--reps", type=_positive_int, default=None,
                   help="repetitions per cell; None takes the preset value (full 200, reduced 50)")
    seeded(p)
    jobs(p)
    p.add_argument("--out", type=Path, required=True, help="archive directory")

    p = sub.add_parser("curves", help="per-(sigma, p) measure means as CSV", formatter_class=fmt)
    p.add_argument("--archive", type=Path, required=True, help="archive directory")
    alpha(p)
    p.add_argument("--out", type=Path, default=None, help="CSV file (stdout if omitted)")

    for name, text in (("heatmap", "rejection-ratio heat map as CSV"), ("mae", "heat-map MAE against the ideal map")):
        p = sub.add_parser(name, help=text, formatter_class=fmt)
        p.add_argument("--archive", type=Path, required=True, help="archive directory")
        p.add_argument("--method", choices=COMPARISON_METHODS, default="l", help="comparison method")
        pairs(p)
        seeded(p)
        alpha(p)
        jobs(p)
        p.add_argument("--out", type=Path, default=None, help="output file (stdout if omitted)")

    p = sub.add_parser("measure", help="l, g and a for one ratings CSV", formatter_class=fmt)
    p.add_argument("--input", type=Path, required=True, help="ratings CSV (subject_id,stimulus_id,rating)")

    p = sub.add_parser("compare", help="compare two ratings CSVs", formatter_class=fmt)
    p.add_argument("--a", type=Path, required=True, help="first ratings CSV")
    p.add_argument("--b", type=Path, required=True, help="second ratings CSV")
    p.add_argument("--method", choices=COMPARISON_METHODS, action="append", default=None,
                   help="comparison method, repeatable (all methods if omitted)")
    alpha(p)

    p = sub.add_parser("report", help="measure and compare a list of datasets", formatter_class=fmt)
    p.add_argument("--datasets", type=_dataset, nargs="+", required=True, metavar="NAME=PATH",
                   help="datasets to include")
    p.add_argument("--method", choices=COMPARISON_METHODS, action="append", default=None,
                   help="comparison method, repeatable (l, g and a if omitted)")
    alpha(p)
    p.add_argument("--out", type=Path, default=None, help="directory for measures.csv, comparisons.csv, report.txt")
    return parser


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _validate(args, parser) -> None:
    if args.command == "simulate":
        if args.sigmas is not None and any(s <= 0 for s in args.sigmas):
            parser.error("--sigmas: every sigma must be > 0")
        if args.ps is not None and any(not 0.0 <= p <= 1.0 for p in args.ps):
            parser.error("--ps: every p must lie in [0, 1]")
    if args.command == "report":
        names = [d.name for d in args.datasets]
        if len(set(names)) != len(names):
            parser.error("--datasets: names must be unique")


def _cmd_simulate(args) -> int:
    preset = PRESETS[args.preset]
    seed = _resolve_seed(args.seed)
    archive = run_study(
        BiasScenario(args.scenario),
        sigmas=args.sigmas or preset.sigmas,
        ps=args.ps or preset.ps,
        r=args.reps or preset.r,
        master_seed=seed,
        jobs=args.jobs,
    )
    write_archive(archive, args.out)
    bad = len(archive.failures)
    print(f"wrote {len(archive.runs)} runs to {args.out}" + (f" ({bad} failed fits)" if bad else ""))
    return 0


def _cmd_curves(args) -> int:
    _emit(curves_to_csv(curves(read_archive(args.archive), args.alpha)), args.out)
    return 0


def _heatmap(args):
    archive = read_archive(args.archive)
    n_pairs = args.pairs or PRESETS[args.preset].pairs
    return heatmap(archive, args.method, n_pairs, _resolve_seed(args.seed), args.alpha, args.jobs)


def _cmd_heatmap(args) -> int:
    _emit(heatmap_to_csv(_heatmap(args)), args.out)
    return 0


def _cmd_mae(args) -> int:
    _emit(f"{mae_vs_ideal(_heatmap(args)):.4f}\n", args.out)
    return 0


def _cmd_measure(args) -> int:
    m = read_ratings_csv(args.input)
    est = measure_all(m)
    print(f"subjects={m.n_subjects} stimuli={m.n_stimuli}")
    for kind in ("l", "g", "a"):
        e = est[kind]
        print(f"{kind}={e.value:.3f} se={e.se:.4f}")
    return 0


def _cmd_compare(args) -> int:
    m1 = read_ratings_csv(args.a)
    m2 = read_ratings_csv(args.b)
    for method in args.method or ("l", "g", "a", "pv"):
        out = compare(m1, m2, method, args.alpha)
        verdict = "significant" if out.significant else "not significant"
        print(f"{method}: p={out.p_value:.2E} {verdict}")
    return 0


def _cmd_report(args) -> int:
    report = precision_report(args.datasets, methods=tuple(args.method or ("l", "g", "a")), alpha=args.alpha)
    if args.out is not None:
        write_report(report, args.out)
    sys.stdout.write(report.text())
    return 1 if not report.measures else 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "curves": _cmd_curves,
    "heatmap": _cmd_heatmap,
    "mae": _cmd_mae,
    "measure": _cmd_measure,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _validate(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
