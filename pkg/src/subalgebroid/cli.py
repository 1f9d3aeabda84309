"""Command-line front end: ``run``, ``validate``, ``gallery-list``, ``gallery-export``.

Exit codes: 0 pass, 1 assertion failure, 2 validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import gallery as gal
from .scenario import ScenarioError, Settings, load, run, validate

EXIT_OK, EXIT_ASSERT, EXIT_INVALID = 0, 1, 2


def _settings(args) -> Settings:
    s = Settings(degree_bound=args.degree_bound, seed=args.seed)
    if args.tol_phi is not None:
        s.tol_phi = args.tol_phi
    if args.tol_residual is not None:
        s.tol_residual = args.tol_residual
    if args.rk_step is not None:
        s.rk_step = args.rk_step
    return s


def _read(path: str) -> dict:
    """A scenario file, or ``gallery:NAME`` for a built-in scenario."""
    if path.startswith("gallery:"):
        try:
            return gal.gallery(path.split(":", 1)[1])
        except KeyError as exc:
            raise ScenarioError("gallery", exc.args[0]) from None
    return load(path)


def _write_tables(tables: dict, out: Path) -> list[str]:
    stem = out.with_suffix("")
    written = []
    for name, rows in sorted(tables.items()):
        path = Path(f"{stem}.{name}.csv")
        with path.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        written.append(str(path))
    return written


def cmd_run(args) -> int:
    try:
        data = _read(args.scenario)
        report = run(data, _settings(args))
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = report.to_json()
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        if args.csv:
            _write_tables(report.tables, out)
    else:
        sys.stdout.write(text)
    for t in report.tasks:
        status = "pass" if t.get("passed", True) and "error" not in t else "FAIL"
        if "passed" not in t and "error" not in t:
            status = "done"
        print(f"[{status}] {t['index']:02d} {t['label']}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_ASSERT


def cmd_validate(args) -> int:
    try:
        data = _read(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = validate(data, _settings(args), args.density)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return EXIT_INVALID if problems else EXIT_OK


def cmd_gallery_list(args) -> int:
    for name in gal.NAMES:
        print(f"{name}\t{gal.gallery(name).get('description', '')}")
    return EXIT_OK


def cmd_gallery_export(args) -> int:
    try:
        data = gal.gallery(args.name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_INVALID
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subalgebroid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("--tol-phi", type=float, help="Phi mismatch threshold for NotEquivalent")
        p.add_argument("--tol-residual", type=float, help="residual threshold for Equivalent")
        p.add_argument("--degree-bound", type=int, help="degree bound for membership and syzygy solves")
        p.add_argument("--rk-step", type=float, help="initial RK4 step")
        p.add_argument("--seed", type=int, help="override the scenario seed")

    p = sub.add_parser("run", help="execute a scenario and write a JSON report")
    p.add_argument("scenario", help="scenario file, or gallery:NAME")
    p.add_argument("--out", help="report path (stdout if omitted)")
    p.add_argument("--csv", action="store_true", help="also write CSV tables next to --out")
    overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="parse and check a scenario without running tasks")
    p.add_argument("scenario")
    p.add_argument("--density", type=int, default=5, help="grid points per axis for chart checks")
    overrides(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gallery-list", help="list built-in scenarios")
    p.set_defaults(func=cmd_gallery_list)

    p = sub.add_parser("gallery-export", help="write a built-in scenario as JSON")
    p.add_argument("name")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gallery_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
