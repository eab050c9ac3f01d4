"""Command line interface: ``tracepoly <subcommand> ...``.

Every subcommand writes one JSON document to stdout (``sigma`` and ``det``
print the polynomial as text unless ``--json`` is given); ``--pretty``
switches to a human-readable layout.  Diagnostics go to stderr.

Exit codes: 0 success, 1 verification failed or counterexample found,
2 usage or parse error, 3 numeric failure (infeasible, not interior, ...).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Sequence

from . import __version__
from .certify import (
    CertificateStructureError,
    QuotientCertificate,
    check_ks,
    check_quotient,
    load_certificate,
    numeric_falsify,
    verify_identity,
)
from .evaluation import (
    DimensionError,
    EvalPoint,
    dump_matrix_json,
    eval_matrix,
    eval_point,
    load_matrix_json,
)
from .hankel import det, hankel_localized, hankel_symbolic, min_eigenvalue, sigma
from .moments import MomentError, build_witness, construct_x3_counterexample, perturb_moments
from .optimize import NonAffineError, compile_constraints, minimize_quadratic, minimize_trace
from .parser import ParseError, format_poly, parse

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# -- helpers ------------------------------------------------------------------------


def _expr(text: str, flag: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise ParseError(f"{flag}: {exc.args[0].rsplit(' at byte', 1)[0]}", exc.offset, text) from None


def _number(tok: str):
    tok = tok.strip()
    try:
        return int(tok)
    except ValueError:
        pass
    if "/" in tok:
        try:
            return Fraction(tok)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad number {tok!r}") from None
    try:
        v = float(tok)
    except ValueError:
        raise UsageError(f"bad number {tok!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"non-finite number {tok!r}")
    return v


def _csv(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    return [_number(t) for t in text.split(",")]


def _exact_or_float(v):
    return str(v) if isinstance(v, Fraction) else (int(v) if isinstance(v, int) else float(v))


def _read_arg(text: str) -> str:
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {text[1:]}: {exc.strerror}") from None
    return text


def _table(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))] if rows else []
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows)


def _pretty(doc, indent: int = 0) -> str:
    pad = " " * indent
    if isinstance(doc, dict):
        lines = []
        for key, val in doc.items():
            if key == "entries" and isinstance(val, list) and val and isinstance(val[0], list):
                lines.append(f"{pad}{key}:")
                table = _table([[str(c) for c in r] for r in val])
                lines.append("\n".join(pad + "  " + ln for ln in table.splitlines()))
            elif isinstance(val, (dict, list)) and val and not all(isinstance(v, (int, float, str)) for v in val):
                lines.append(f"{pad}{key}:")
                lines.append(_pretty(val, indent + 2))
            else:
                shown = ", ".join(map(str, val)) if isinstance(val, list) else val
                lines.append(f"{pad}{key}: {shown}")
        return "\n".join(lines)
    if isinstance(doc, list):
        return "\n".join(_pretty(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {v}" for v in doc)
    return f"{pad}{doc}"


def _emit(args, doc) -> None:
    if getattr(args, "pretty", False):
        print(_pretty(doc))
    else:
        print(json.dumps(doc))


# -- subcommands --------------------------------------------------------------------


def cmd_eval(args) -> int:
    f = _expr(args.f, "-f")
    if args.matrix is not None:
        try:
            X = load_matrix_json(_read_arg(args.matrix))
        except json.JSONDecodeError as exc:
            raise UsageError(f"--matrix: invalid JSON ({exc.msg})") from None
        _emit(args, dump_matrix_json(eval_matrix(f, X)))
        return EXIT_OK
    if args.moments is None:
        raise UsageError("eval needs --matrix or --moments")
    moments = _csv(args.moments)
    beta0 = _number(args.beta0) if args.beta0 is not None else 0
    if args.beta0 is None and not f.is_pure():
        raise UsageError("expression involves x; give --beta0")
    value = eval_point(f, EvalPoint(beta0, moments))
    _emit(args, {"value": _exact_or_float(value)})
    return EXIT_OK


def _poly_matrix_doc(M) -> dict:
    return {"size": M.size, "entries": M.to_strings()}


def cmd_hankel(args) -> int:
    if args.localize is None:
        M = hankel_symbolic(args.d)
    else:
        M = hankel_localized(args.d, _expr(args.localize, "--localize"))
    _emit(args, {"d": args.d, **_poly_matrix_doc(M)})
    return EXIT_OK


def _print_poly(args, p, extra: dict) -> None:
    if args.json or args.pretty:
        _emit(args, {**extra, "poly": format_poly(p), "degree": p.degree() if not p.is_zero() else None})
    else:
        print(format_poly(p))


def cmd_sigma(args) -> int:
    M = hankel_symbolic(args.d)
    if not 1 <= args.j <= M.size:
        raise UsageError(f"-j must lie in 1..{M.size} for d={args.d}")
    _print_poly(args, sigma(args.j, M), {"d": args.d, "j": args.j})
    return EXIT_OK


def cmd_det(args) -> int:
    if args.localize is None:
        M = hankel_symbolic(args.d)
    else:
        M = hankel_localized(args.d, _expr(args.localize, "--localize"))
    _print_poly(args, det(M), {"d": args.d})
    return EXIT_OK


def cmd_witness(args) -> int:
    S = [_expr(s, "--constraint") for s in args.constraint]
    g = _expr(args.g, "--g") if args.g else None
    gamma = [float(v) for v in _csv(args.moments)]
    if len(gamma) % 2:
        raise UsageError(f"--moments needs an even number of entries, got {len(gamma)}")
    if args.perturb is not None:
        gamma = perturb_moments(gamma, args.perturb)
    try:
        wit = build_witness(EvalPoint(float(_number(args.beta0)), gamma), S, args.eps, g)
    except MomentError as exc:
        raise NumericFailure(str(exc)) from None
    doc = wit.as_dict()
    if args.perturb is not None:
        doc["perturbed_moments"] = gamma
    _emit(args, doc)
    return EXIT_OK


def cmd_x3(args) -> int:
    if not 1 <= args.d <= 6:
        raise UsageError("-d must lie in 1..6")
    res = construct_x3_counterexample(args.d)
    H, L = res.hankel_matrix(), res.localized_matrix()
    tol = args.tol
    h_min, l_min = min_eigenvalue(H), min_eigenvalue(L)
    checks = {
        "alpha1_negative": res.alpha[0] < 0,
        "hankel_min_eigenvalue": h_min,
        "localized_min_eigenvalue": l_min,
        "hankel_psd": h_min >= -tol,
        "localized_psd": l_min >= -tol,
        "tol": tol,
    }
    passed = checks["alpha1_negative"] and checks["hankel_psd"] and checks["localized_psd"]
    _emit(args, {
        "d": args.d,
        "alpha": res.alpha_float(),
        "alpha_exact": [str(a) for a in res.alpha],
        "epsilon": str(res.epsilon),
        "checks": checks,
        "passed": passed,
    })
    return EXIT_OK if passed else EXIT_FAILED


def cmd_optimize(args) -> int:
    S = [_expr(s, "--constraint") for s in args.constraint]
    squares = [_expr(s, "--square") for s in args.square]
    p = _expr(args.objective, "--objective") if args.objective else None
    if p is None and not squares:
        raise UsageError("optimize needs --objective or at least one --square")
    spec = compile_constraints(S, args.d)
    if squares:
        res = minimize_quadratic(p, squares, spec, tol=args.tol)
    else:
        res = minimize_trace(p, spec, tol=args.tol)
    doc = res.as_dict()
    _emit(args, doc)
    if res.status in ("optimal", "unbounded"):
        return EXIT_OK
    print(f"error: solver status {res.status}", file=sys.stderr)
    return EXIT_NUMERIC


def cmd_verify(args) -> int:
    if args.certificate is not None:
        if args.lhs is not None or args.rhs is not None:
            raise UsageError("--certificate cannot be combined with --lhs/--rhs")
        try:
            cert = load_certificate(_read_arg(args.certificate))
        except json.JSONDecodeError as exc:
            raise UsageError(f"--certificate: invalid JSON ({exc.msg})") from None
        report = check_quotient(cert) if isinstance(cert, QuotientCertificate) else check_ks(cert)
        _emit(args, report.as_dict())
        return EXIT_OK if report.ok else EXIT_FAILED
    if args.lhs is None or args.rhs is None:
        raise UsageError("verify needs --lhs and --rhs, or --certificate")
    lhs, rhs = _expr(args.lhs, "--lhs"), _expr(args.rhs, "--rhs")
    ok = verify_identity(lhs, rhs)
    doc = {"verified": ok}
    if not ok:
        doc["difference"] = format_poly(lhs - rhs)
    _emit(args, doc)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_falsify(args) -> int:
    f = _expr(args.f, "-f")
    S = [_expr(s, "--constraint") for s in args.constraint]
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    found = numeric_falsify(f, S, args.trials, args.seed, witness=not args.no_witness)
    if found is None:
        _emit(args, {"counterexample": None, "trials": args.trials, "seed": args.seed})
        return EXIT_OK
    _emit(args, {"counterexample": found.as_dict(), "trials": args.trials, "seed": args.seed})
    return EXIT_FAILED


# -- parser -------------------------------------------------------------------------


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be positive and finite")
    return v


def _unit_float(text: str) -> float:
    v = _positive_float(text)
    if v > 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON")

    ap = argparse.ArgumentParser(prog="tracepoly", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"tracepoly {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="<command>")
    sub.required = True

    p = sub.add_parser("eval", parents=[common], help="evaluate at a matrix or a point")
    p.add_argument("-f", required=True, help="trace polynomial")
    p.add_argument("--matrix", help='JSON {"n", "entries"} inline, or @file')
    p.add_argument("--moments", help="comma-separated Tr(x), Tr(x^2), ...")
    p.add_argument("--beta0", help="value substituted for x at a point")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("hankel", parents=[common], help="symbolic Hankel matrix")
    p.add_argument("-d", type=_nonneg_int, required=True)
    p.add_argument("--localize", help="localize at this polynomial")
    p.set_defaults(run=cmd_hankel)

    p = sub.add_parser("sigma", parents=[common], help="j-th characteristic coefficient of Han_d")
    p.add_argument("-d", type=_nonneg_int, required=True)
    p.add_argument("-j", type=_nonneg_int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_sigma)

    p = sub.add_parser("det", parents=[common], help="determinant of Han_d")
    p.add_argument("-d", type=_nonneg_int, required=True)
    p.add_argument("--localize", help="localize at this polynomial")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_det)

    p = sub.add_parser("witness", parents=[common], help="diagonal matrix realising given moments")
    p.add_argument("--beta0", required=True)
    p.add_argument("--moments", required=True, help="comma-separated, even count")
    p.add_argument("--constraint", action="append", default=[])
    p.add_argument("--eps", type=_positive_float, default=1e-3)
    p.add_argument("--perturb", type=_unit_float, help="mix with a fixed interior measure first")
    p.add_argument("--g", help="polynomial that must not vanish at the witness point")
    p.set_defaults(run=cmd_witness)

    p = sub.add_parser("x3-counterexample", parents=[common],
                       help="moments passing both Hankel tests with Tr(x) < 0")
    p.add_argument("-d", type=_nonneg_int, required=True)
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.set_defaults(run=cmd_x3)

    p = sub.add_parser("optimize", parents=[common], help="minimise a trace over the moment set")
    p.add_argument("--objective", help="polynomial p; minimises Tr(p)")
    p.add_argument("-d", type=_nonneg_int, required=True)
    p.add_argument("--constraint", action="append", default=[])
    p.add_argument("--square", action="append", default=[], help="affine form to be squared")
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.set_defaults(run=cmd_optimize)

    p = sub.add_parser("verify", parents=[common], help="exact identity or certificate check")
    p.add_argument("--lhs")
    p.add_argument("--rhs")
    p.add_argument("--certificate", help="certificate JSON inline, or @file")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("falsify", parents=[common], help="random search for negative values")
    p.add_argument("-f", required=True)
    p.add_argument("--constraint", action="append", default=[])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-witness", action="store_true", help="skip the matrix witness")
    p.set_defaults(run=cmd_falsify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except ParseError as exc:
        src = f" in {exc.text!r}" if exc.text else ""
        print(f"error: {exc}{src}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, NonAffineError, CertificateStructureError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
