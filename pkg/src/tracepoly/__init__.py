"""Univariate trace polynomials: exact algebra, evaluation on symmetric
matrices, Hankel positivity, moment witnesses, trace SDPs and certificate
checking."""

from .certify import (
    CertificateExpr,
    Factor,
    KsCertificate,
    QuotientCertificate,
    expand,
    numeric_falsify,
    verify_identity,
    verify_ks,
    verify_quotient,
)
from .evaluation import EvalPoint, eval_matrix, eval_point, eval_pure
from .hankel import det, hankel_localized, hankel_numeric, hankel_symbolic, is_psd, sigma
from .kernels import BACKEND
from .moments import (
    AtomicMeasure,
    DiagonalWitness,
    build_witness,
    construct_x3_counterexample,
    rationalize,
    solve_hamburger,
)
from .optimize import compile_constraints, minimize_quadratic, minimize_trace
from .parser import ParseError, format_poly, parse
from .ring import ONE, X, ZERO, TracePoly, Tr, trx

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "BACKEND",
    "CertificateExpr",
    "DiagonalWitness",
    "EvalPoint",
    "Factor",
    "KsCertificate",
    "ONE",
    "ParseError",
    "QuotientCertificate",
    "Tr",
    "TracePoly",
    "X",
    "ZERO",
    "build_witness",
    "compile_constraints",
    "construct_x3_counterexample",
    "det",
    "eval_matrix",
    "eval_point",
    "eval_pure",
    "expand",
    "format_poly",
    "hankel_localized",
    "hankel_numeric",
    "hankel_symbolic",
    "is_psd",
    "minimize_quadratic",
    "minimize_trace",
    "numeric_falsify",
    "parse",
    "rationalize",
    "sigma",
    "solve_hamburger",
    "trx",
    "verify_identity",
    "verify_ks",
    "verify_quotient",
]
