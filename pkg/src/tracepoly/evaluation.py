"""Evaluation of trace polynomials at symmetric matrices and at points.

Matrices come in two flavours: float64 numpy arrays, and numpy object arrays
of :class:`~fractions.Fraction` for exact identities (ampliation and the
like).  Trace symbols always evaluate as the normalized trace ``tr(X^j)/n``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .ring import TracePoly


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class EvalPoint:
    """A point ``(beta0, beta_1, ..., beta_k)``: ``x -> beta0``, ``Tr(x^j) -> beta_j``."""

    beta0: float
    moments: tuple

    def __init__(self, beta0, moments: Sequence = ()):
        object.__setattr__(self, "beta0", beta0)
        object.__setattr__(self, "moments", tuple(moments))


def _is_exact(X: np.ndarray) -> bool:
    return X.dtype == object


def as_sym_matrix(entries, *, exact: bool | None = None, rtol: float = 1e-12) -> np.ndarray:
    """Validate and convert ``entries`` to a symmetric matrix.

    Strings such as ``"1/3"`` and Python ints select the exact variant unless
    ``exact`` says otherwise; float entries select float64.
    """
    rows = [list(r) for r in entries]
    n = len(rows)
    if n == 0:
        raise DimensionError("matrix has dimension 0")
    if any(len(r) != n for r in rows):
        raise DimensionError("matrix is not square")
    flat = [v for r in rows for v in r]
    if exact is None:
        exact = all(isinstance(v, (str, int, Fraction)) and not isinstance(v, bool) for v in flat)
    if exact:
        M = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                v = rows[i][j]
                M[i, j] = Fraction(v)
        for i in range(n):
            for j in range(i + 1, n):
                if M[i, j] != M[j, i]:
                    raise ValueError(f"matrix not symmetric at ({i}, {j})")
        return M
    M = np.array([[float(Fraction(v)) if isinstance(v, str) else float(v) for v in r] for r in rows])
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > rtol * scale:
        raise ValueError("matrix not symmetric")
    return M


def load_matrix_json(text: str) -> np.ndarray:
    """Read ``{"n": int, "entries": [[...]]}``."""
    doc = json.loads(text)
    n = doc.get("n")
    entries = doc.get("entries")
    if not isinstance(n, int) or not isinstance(entries, list):
        raise ValueError('matrix JSON needs integer "n" and list "entries"')
    M = as_sym_matrix(entries)
    if M.shape[0] != n:
        raise DimensionError(f'"n" is {n} but entries are {M.shape[0]}x{M.shape[0]}')
    return M


def dump_matrix_json(X: np.ndarray) -> dict:
    if _is_exact(X):
        entries = [[str(v) for v in row] for row in X]
    else:
        entries = [[float(v) for v in row] for row in X]
    return {"n": int(X.shape[0]), "entries": entries}


class _Powers:
    """Memoised powers of one matrix, built by repeated squaring."""

    def __init__(self, X: np.ndarray):
        self.X = X
        n = X.shape[0]
        if _is_exact(X):
            eye = np.empty((n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    eye[i, j] = Fraction(int(i == j))
        else:
            eye = np.eye(n)
        self.cache = {0: eye, 1: X}

    def __call__(self, k: int) -> np.ndarray:
        got = self.cache.get(k)
        if got is None:
            half = self(k // 2)
            got = half @ half
            if k % 2:
                got = got @ self.X
            self.cache[k] = got
        return got


def normalized_moments(X: np.ndarray, k: int) -> list:
    """``[Tr(X), ..., Tr(X^k)]`` with the normalized trace."""
    X = np.asarray(X) if not isinstance(X, np.ndarray) else X
    n = X.shape[0]
    if n == 0:
        raise DimensionError("matrix has dimension 0")
    powers = _Powers(X)
    if _is_exact(X):
        return [sum(np.diagonal(powers(j)), Fraction(0)) / n for j in range(1, k + 1)]
    return [float(np.trace(powers(j))) / n for j in range(1, k + 1)]


def _monomial_scalar(mono, coeff, moments):
    val = coeff
    for j in range(1, len(mono)):
        e = mono[j]
        if e:
            val = val * moments[j - 1] ** e
    return val


def eval_matrix(f: TracePoly, X) -> np.ndarray:
    """Evaluate ``f`` at a symmetric matrix ``X``."""
    X = X if isinstance(X, np.ndarray) else as_sym_matrix(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError("matrix is not square")
    n = X.shape[0]
    if n == 0:
        raise DimensionError("matrix has dimension 0")
    exact = _is_exact(X)
    powers = _Powers(X)
    D = f.max_index
    if exact:
        moments = [sum(np.diagonal(powers(j)), Fraction(0)) / n for j in range(1, D + 1)]
    else:
        moments = [float(np.trace(powers(j))) / n for j in range(1, D + 1)]
    by_power: dict[int, object] = {}
    for mono, c in f.terms.items():
        coeff = c if exact else float(c)
        e0 = mono[0] if mono else 0
        by_power[e0] = by_power.get(e0, 0) + _monomial_scalar(mono, coeff, moments)
    out = powers(0) * (Fraction(0) if exact else 0.0)
    for e0, scalar in by_power.items():
        out = out + powers(e0) * scalar
    return out


def eval_point(f: TracePoly, beta: EvalPoint):
    """Scalar substitution ``x -> beta0``, ``Tr(x^j) -> beta_j``."""
    moments = beta.moments
    if f.max_index > len(moments):
        raise DimensionError(
            f"need {f.max_index} moments, got {len(moments)}"
        )
    exact = _all_exact(beta)
    total = 0
    for mono, c in f.terms.items():
        coeff = c if exact else float(c)
        val = _monomial_scalar(mono, coeff, moments)
        if mono and mono[0]:
            val = val * beta.beta0 ** mono[0]
        total = total + val
    return total


def _all_exact(beta: EvalPoint) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in (beta.beta0, *beta.moments))


def eval_pure(p: TracePoly, gamma: Sequence):
    """Evaluate a pure trace polynomial at a moment vector."""
    if not p.is_pure():
        raise ValueError("eval_pure needs a pure trace polynomial (no free x)")
    return eval_point(p, EvalPoint(0, gamma))


def eval_points(f: TracePoly, beta0s, moments) -> np.ndarray:
    """Vectorised float evaluation at many points.

    ``beta0s`` has shape ``(N,)`` and ``moments`` shape ``(N, k)``.
    """
    moments = np.atleast_2d(np.asarray(moments, dtype=np.float64))
    beta0s = np.asarray(beta0s, dtype=np.float64).reshape(-1)
    if f.max_index > moments.shape[1]:
        raise DimensionError(f"need {f.max_index} moments, got {moments.shape[1]}")
    width = f.max_index + 1
    exps, coeffs = f.exponent_table(width)
    pts = np.empty((moments.shape[0], width))
    pts[:, 0] = beta0s
    pts[:, 1:] = moments[:, : width - 1]
    return kernels.eval_points(exps, coeffs, pts)
