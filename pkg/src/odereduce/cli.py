"""Command-line entry point.

Exit codes: 0 pass, 1 fail or no match, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .forms import FORM_IDS
from .reduction import METHODS
from .report import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    InputError,
    Report,
    check_report,
    classify,
    diagnostic,
    example_report,
    reduce_report,
    text_summary,
    verify_report,
)


def _read(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError("io", f"cannot read {source}: {exc.strerror}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--seed", type=int, default=0, help="seed for zero tests and sampling (default 0)")
    common.add_argument("--tol", type=float, default=1e-6, help="residual tolerance (default 1e-6)")
    common.add_argument("--dependent", default="y", help="dependent variable name (default y)")
    common.add_argument("--independent", default="x", help="independent variable name (default x)")

    p = argparse.ArgumentParser(
        prog="odereduce",
        description="Classify ODEs of order 2-4 against linearizable normal forms and reduce their order.",
        epilog="exit codes: 0 pass, 1 fail or no match, 2 input error, 3 internal error",
    )
    p.add_argument("--version", action="version", version=f"odereduce {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="match forms and evaluate their conditions")
    c.add_argument("input", help="file with one ODE, or - for standard input")

    r = sub.add_parser("reduce", parents=[common], help="reduce the order by one")
    r.add_argument("input", help="file with one ODE, or - for standard input")
    r.add_argument("--method", choices=("auto",) + METHODS, default="auto", help="reduction method (default auto)")

    k = sub.add_parser("check", parents=[common], help="evaluate a single form")
    k.add_argument("form", choices=FORM_IDS)
    k.add_argument("input", help="file with one ODE, or - for standard input")

    v = sub.add_parser("verify", parents=[common], help="numerically validate the reduction")
    v.add_argument("input", help="file with one ODE, or - for standard input")
    v.add_argument("--method", choices=("auto",) + METHODS, default="auto", help="reduction method (default auto)")
    v.add_argument("--numeric", action=argparse.BooleanOptionalAction, default=True,
                   help="integrate the source ODE and check the reduction residual (default on)")
    v.add_argument("--h", type=float, default=None, help="integration step")
    v.add_argument("--steps", type=int, default=None, help="number of steps")
    v.add_argument("--initial", type=_floats, default=None, help="initial jets y,y',... comma-separated")

    e = sub.add_parser("example", parents=[common], help="run a built-in worked example")
    e.add_argument("n", type=int, choices=(1, 2, 3, 4), help="example number")
    return p


def run(args: argparse.Namespace) -> Report:
    if args.command == "example":
        return example_report(args.n, seed=args.seed, tol=args.tol)
    text = _read(args.input)
    names = {"dependent": args.dependent, "independent": args.independent}
    if args.command == "classify":
        return classify(text, seed=args.seed, **names)
    if args.command == "reduce":
        return reduce_report(text, args.method, seed=args.seed, **names)
    if args.command == "check":
        return check_report(text, args.form, seed=args.seed, **names)
    return verify_report(
        text, args.method, numeric=args.numeric, h=args.h, steps=args.steps, tol=args.tol,
        seed=args.seed, initial=args.initial, **names,
    )


def emit(report: Report, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(text_summary(report))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = run(args)
    except InputError as err:
        payload = diagnostic(args.command, err)
        where = "" if err.offset is None else f" at byte {err.offset}"
        print(json.dumps(payload, indent=2) if args.json else f"error ({err.kind}){where}: {err.message}")
        return EXIT_INPUT
    except Exception as exc:  # never let a traceback reach the shell
        payload = {"status": "internal-error", "exit_code": EXIT_INTERNAL, "error": {
            "kind": "internal", "message": f"{type(exc).__name__}: {exc}", "offset": None,
        }}
        print(json.dumps(payload, indent=2) if args.json else f"internal error: {exc}")
        return EXIT_INTERNAL
    emit(report, args.json)
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
