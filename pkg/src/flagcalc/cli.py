"""Command-line front end.

JSON results go to stdout (or ``--output``); a one-line summary or
diagnostic goes to stderr.  Exit status: 0 on success, 2 on a domain error,
1 on I/O, format or usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Optional, Sequence

from .algebra import DEFAULT_TOL, matrix_from_json, matrix_to_json
from .errors import FlagCalcError, FormatError
from .flag import diagonal_truncation, flag_factorize, flag_from_json, flag_to_json, frame_between
from .idempotent import orthogonalize
from .stiefel import curve_from_json, refine_curve, sigma_delta, stiefel_from_group, transport_frames
from .suites import run_suite, suite_tolerance

SEED_ENV = "FLAGCALC_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _load(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _emit(obj: Any, path: Optional[str]) -> None:
    text = json.dumps(obj) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _need_flag(args) -> Any:
    if args.flag is None:
        raise UsageError(f"{args.command} requires --flag")
    return flag_from_json(_load(args.flag), args.tolerance)


def _tool(args) -> str:
    tol = args.tolerance
    if args.command == "orthogonalize":
        p = matrix_from_json(_load(args.input))
        _emit(matrix_to_json(orthogonalize(p, tol)), args.output)
        return "orthogonalize: ok"
    delta = _need_flag(args)
    x = matrix_from_json(_load(args.input))
    if args.command == "factor":
        f = flag_factorize(delta, x, tol)
        _emit({"L": matrix_to_json(f.lower), "M": matrix_to_json(f.middle), "U": matrix_to_json(f.upper)}, args.output)
    elif args.command == "truncate":
        _emit(matrix_to_json(diagonal_truncation(delta, x)), args.output)
    elif args.command == "sigma":
        _emit(flag_to_json(sigma_delta(stiefel_from_group(x, delta, tol), tol)), args.output)
    return f"{args.command}: ok"


def _transport(args) -> str:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    template, samples = curve_from_json(_load(args.curve), args.tolerance)
    curve = refine_curve(samples, args.steps)
    r = transport_frames(template, curve, frame_between(template, curve[0]), args.tolerance)
    _emit(
        {
            "u": matrix_to_json(r.u),
            "max_vertical_residual": r.max_vertical_residual,
            "final_flag_residual": r.final_flag_residual,
        },
        args.output,
    )
    return f"transport: {len(curve) - 1} steps, final flag residual {r.final_flag_residual:.3e}"


def _verify(args) -> str:
    seed = args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    threshold = args.tol if args.tol is not None else suite_tolerance(args.suite, args.tolerance)
    report = run_suite(args.suite, args.dim, args.trials, seed, args.tolerance, threshold)
    _emit(report.to_json(), None)
    status = "PASS" if report.failures == 0 else "FAIL"
    return (
        f"{status} {report.suite}: {report.failures}/{report.trials} failures, "
        f"max residual {report.max_residual:.3e} (tol {threshold:.1e}), seed {report.seed}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flagcalc", description="Flag manifolds, Stiefel bundles and their connections.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run a seeded invariant suite")
    v.add_argument("suite", help="flags, connections, stiefel, transport or all")
    v.add_argument("--dim", type=int, default=8)
    v.add_argument("--trials", type=int, default=50)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=None, help="override the suite tolerance")

    for name in ("factor", "truncate", "orthogonalize", "sigma"):
        t = sub.add_parser(name)
        t.add_argument("--input", required=True)
        t.add_argument("--flag")
        t.add_argument("--output")

    tr = sub.add_parser("transport", help="parallel transport along a sampled flag curve")
    tr.add_argument("--curve", required=True)
    tr.add_argument("--output")
    tr.add_argument("--steps", type=int, default=1, help="substeps per curve segment")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.tolerance = DEFAULT_TOL
        if args.command == "verify":
            msg = _verify(args)
        elif args.command == "transport":
            msg = _transport(args)
        else:
            msg = _tool(args)
    except FlagCalcError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (FormatError, UsageError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(msg, file=sys.stderr)
    return 0
