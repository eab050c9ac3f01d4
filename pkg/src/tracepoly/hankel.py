"""Hankel matrices over pure trace polynomials and PSD testing.

``hankel_symbolic(d)`` is the ``(d+1) x (d+1)`` matrix with entries
``Tr(x^(i+j-2))``; ``sigma(j, M)`` is the j-th characteristic coefficient,
computed exactly as a sum of principal minors.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .evaluation import eval_pure
from .ring import ONE, ZERO, TracePoly

MAX_SYMBOLIC_SIZE = 12
DEFAULT_PSD_TOL = 1e-9


class PolyMatrix:
    """Immutable square matrix with TracePoly entries."""

    __slots__ = ("_rows",)

    def __init__(self, rows: Sequence[Sequence[TracePoly]]):
        rows = tuple(tuple(r) for r in rows)
        m = len(rows)
        if any(len(r) != m for r in rows):
            raise ValueError("PolyMatrix must be square")
        if not all(isinstance(e, TracePoly) for r in rows for e in r):
            raise TypeError("PolyMatrix entries must be TracePoly")
        self._rows = rows

    @property
    def size(self) -> int:
        return len(self._rows)

    def __getitem__(self, ij) -> TracePoly:
        i, j = ij
        return self._rows[i][j]

    def rows(self) -> tuple[tuple[TracePoly, ...], ...]:
        return self._rows

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMatrix) and self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        return "PolyMatrix([" + ", ".join(
            "[" + ", ".join(str(e) for e in r) + "]" for r in self._rows
        ) + "])"

    def is_symmetric(self) -> bool:
        m = self.size
        return all(self._rows[i][j] == self._rows[j][i] for i in range(m) for j in range(i))

    def map(self, fn: Callable[[TracePoly], TracePoly]) -> "PolyMatrix":
        return PolyMatrix([[fn(e) for e in r] for r in self._rows])

    def evaluate(self, gamma: Sequence[float]) -> np.ndarray:
        """Numeric matrix at a moment vector (entries must be pure)."""
        return np.array([[float(eval_pure(e, gamma)) for e in r] for r in self._rows])

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in r] for r in self._rows]


def hankel_symbolic(d: int) -> PolyMatrix:
    if d < 0:
        raise ValueError("d must be nonnegative")
    return PolyMatrix([[TracePoly.tr(i + j) for j in range(d + 1)] for i in range(d + 1)])


def hankel_localized(d: int, s: TracePoly) -> PolyMatrix:
    """Localized Hankel matrix with entries ``Tr(x^(i+j-2) * s)``."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    return PolyMatrix(
        [[(TracePoly.x(i + j) * s).trace() for j in range(d + 1)] for i in range(d + 1)]
    )


def _det_sub(M: PolyMatrix, idx: Sequence[int]) -> TracePoly:
    """Determinant of the principal submatrix on ``idx``.

    Laplace expansion down the rows, memoised over the set of used columns.
    """
    r = len(idx)
    if r == 0:
        return ONE
    # dets[cols] = det of rows idx[:len(cols)] against columns cols (as a bitmask over idx)
    dets: dict[int, TracePoly] = {0: ONE}
    for row in range(r):
        nxt: dict[int, TracePoly] = {}
        for mask, sub in dets.items():
            if sub.is_zero():
                continue
            # sign from the number of used columns to the right of each new one
            for c in range(r):
                bit = 1 << c
                if mask & bit:
                    continue
                entry = M[idx[row], idx[c]]
                if entry.is_zero():
                    continue
                above = bin(mask >> (c + 1)).count("1")
                term = entry * sub
                if above % 2:
                    term = -term
                key = mask | bit
                nxt[key] = nxt.get(key, ZERO) + term
        dets = nxt
    return dets.get((1 << r) - 1, ZERO)


def det(M: PolyMatrix) -> TracePoly:
    """Exact determinant."""
    if M.size > MAX_SYMBOLIC_SIZE:
        raise ValueError(f"symbolic determinant limited to size {MAX_SYMBOLIC_SIZE}")
    return _det_sub(M, range(M.size))


def sigma(j: int, M: PolyMatrix) -> TracePoly:
    """Sum of all ``j x j`` principal minors of ``M``."""
    m = M.size
    if not 1 <= j <= m:
        raise ValueError(f"sigma index {j} outside 1..{m}")
    if m > MAX_SYMBOLIC_SIZE:
        raise ValueError(f"symbolic sigma limited to size {MAX_SYMBOLIC_SIZE}")
    total = ZERO
    for idx in combinations(range(m), j):
        total = total + _det_sub(M, idx)
    return total


def hankel_numeric(gamma: Sequence[float]) -> np.ndarray:
    """``(d+1) x (d+1)`` matrix with entries ``gamma_(i+j-2)``, ``gamma_0 = 1``."""
    gamma = [float(g) for g in gamma]
    if len(gamma) % 2:
        raise ValueError(f"moment vector must have even length, got {len(gamma)}")
    d = len(gamma) // 2
    full = [1.0] + gamma
    return np.array([[full[i + j] for j in range(d + 1)] for i in range(d + 1)])


def eigenvalues(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    w, _ = kernels.jacobi_eigh(0.5 * (M + M.T))
    return w


def min_eigenvalue(M: np.ndarray) -> float:
    return float(eigenvalues(M)[0])


def is_psd(M: np.ndarray, tol: float = DEFAULT_PSD_TOL) -> bool:
    """Minimum eigenvalue is at least ``-tol * max(1, ||M||_2)``."""
    w = eigenvalues(M)
    if w.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(w))))
    return bool(w[0] >= -tol * scale)
