"""Exact arithmetic in the ring of univariate trace polynomials.

A trace polynomial is stored as a sparse map from exponent vectors over the
symbols ``t0 = x, t1 = Tr(x), ..., tD = Tr(x^D)`` to nonzero rationals.
Exponent vectors carry no trailing zeros, so the empty tuple is the constant
monomial and two equal polynomials always have identical term maps.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Integral
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Tuple, Union

import numpy as np

Monomial = Tuple[int, ...]
Coefficient = Union[int, Fraction]

# Largest trace index (and largest power of x) accepted anywhere in the ring.
MAX_INDEX = 10_000


class IndexRangeError(ValueError):
    """A trace index or exponent exceeded :data:`MAX_INDEX`."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, Integral) and not isinstance(c, bool):
        return Fraction(int(c))
    raise TypeError(
        f"trace polynomial coefficients must be int or Fraction, got {type(c).__name__}"
    )


def _trim(mono: Iterable[int]) -> Monomial:
    m = list(mono)
    while m and m[-1] == 0:
        m.pop()
    if any(e < 0 for e in m):
        raise ValueError(f"negative exponent in monomial {tuple(m)}")
    if len(m) - 1 > MAX_INDEX:
        raise IndexRangeError(f"trace index {len(m) - 1} exceeds {MAX_INDEX}")
    return tuple(m)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, e in enumerate(b):
        out[i] += e
    return tuple(out)


def monomial_degree(mono: Monomial) -> int:
    """Weighted degree: ``deg x = 1`` and ``deg Tr(x^j) = j``."""
    if not mono:
        return 0
    return mono[0] + sum(j * e for j, e in enumerate(mono) if j)


def monomial_sort_key(mono: Monomial, width: int) -> tuple:
    """Key for the canonical descending order.

    Graded by weighted degree, then lexicographic with ``x`` first and trace
    symbols compared from the highest index down, so that ``Tr(x^2)`` sorts
    before ``Tr(x)^2``.
    """
    padded = tuple(mono) + (0,) * (width - len(mono))
    head = padded[0] if padded else 0
    return (monomial_degree(mono), head) + tuple(reversed(padded[1:]))


class TracePoly:
    """Immutable sparse trace polynomial with rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Iterable[int], Coefficient] | None = None):
        acc: dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                key = _trim(mono)
                acc[key] = acc.get(key, Fraction(0)) + _as_fraction(c)
        self._terms = {m: c for m, c in acc.items() if c != 0}
        self._hash = None

    @classmethod
    def _from_clean(cls, terms: dict[Monomial, Fraction]) -> "TracePoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: Coefficient) -> "TracePoly":
        return cls({(): c})

    @classmethod
    def x(cls, power: int = 1) -> "TracePoly":
        if power < 0:
            raise ValueError("negative power of x")
        return cls({(power,): 1})

    @classmethod
    def tr(cls, j: int) -> "TracePoly":
        """The symbol ``Tr(x^j)``; ``Tr(x^0)`` is the constant 1."""
        if j < 0:
            raise ValueError("negative trace index")
        if j > MAX_INDEX:
            raise IndexRangeError(f"trace index {j} exceeds {MAX_INDEX}")
        if j == 0:
            return cls.constant(1)
        return cls({(0,) * j + (1,): 1})

    # structure --------------------------------------------------------

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def max_index(self) -> int:
        """Largest trace index D with ``Tr(x^D)`` present (0 if none)."""
        return max((len(m) - 1 for m in self._terms), default=0)

    @property
    def x_degree(self) -> int:
        return max((m[0] for m in self._terms if m), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_pure(self) -> bool:
        return all(not m or m[0] == 0 for m in self._terms)

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def coefficient(self, mono: Iterable[int]) -> Fraction:
        return self._terms.get(_trim(mono), Fraction(0))

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        width = max((len(m) for m in self._terms), default=0)
        return sorted(
            self._terms.items(),
            key=lambda kv: monomial_sort_key(kv[0], width),
            reverse=True,
        )

    def __iter__(self) -> Iterator[tuple[Monomial, Fraction]]:
        return iter(self.sorted_terms())

    def __len__(self) -> int:
        return len(self._terms)

    # arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "TracePoly":
        if isinstance(other, TracePoly):
            return other
        return TracePoly.constant(_as_fraction(other))

    def __add__(self, other) -> "TracePoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return TracePoly._from_clean(out)

    __radd__ = __add__

    def __neg__(self) -> "TracePoly":
        return TracePoly._from_clean({m: -c for m, c in self._terms.items()})

    def __pos__(self) -> "TracePoly":
        return self

    def __sub__(self, other) -> "TracePoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "TracePoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "TracePoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _mono_mul(ma, mb)
                out[m] = out.get(m, 0) + ca * cb
        return TracePoly._from_clean({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TracePoly":
        if not isinstance(k, Integral):
            return NotImplemented
        if k < 0:
            raise ValueError("negative powers are not trace polynomials")
        if k > MAX_INDEX:
            raise IndexRangeError(f"exponent {k} exceeds {MAX_INDEX}")
        result = TracePoly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c: Coefficient) -> "TracePoly":
        c = _as_fraction(c)
        if c == 0:
            return TracePoly()
        return TracePoly._from_clean({m: c * v for m, v in self._terms.items()})

    # the Tr operator and degree ----------------------------------------

    def trace(self) -> "TracePoly":
        """Apply ``Tr``: the unital pure-linear map sending ``x^j`` to ``Tr(x^j)``."""
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            k = m[0] if m else 0
            if k:
                if k > MAX_INDEX:
                    raise IndexRangeError(f"trace index {k} exceeds {MAX_INDEX}")
                width = max(len(m), k + 1)
                new = list(m) + [0] * (width - len(m))
                new[0] = 0
                new[k] += 1
                m = tuple(new)
            out[m] = out.get(m, 0) + c
        return TracePoly._from_clean({m: c for m, c in out.items() if c})

    def degree(self) -> int:
        if not self._terms:
            raise ValueError("degree of the zero trace polynomial is undefined")
        return max(monomial_degree(m) for m in self._terms)

    # comparison -------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, TracePoly):
            return self._terms == other._terms
        try:
            return self._terms == TracePoly._coerce(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        from .parser import format_poly

        return f"TracePoly({format_poly(self)!r})"

    def __str__(self) -> str:
        from .parser import format_poly

        return format_poly(self)

    # numeric views ------------------------------------------------------

    def exponent_table(self, width: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(nterms, width)`` int64 exponents and float64 coefficients."""
        if width is None:
            width = self.max_index + 1
        mons = list(self._terms)
        table = np.zeros((len(mons), width), dtype=np.int64)
        for i, m in enumerate(mons):
            if len(m) > width:
                raise ValueError(f"monomial needs width {len(m)} > {width}")
            table[i, : len(m)] = m
        coeffs = np.array([float(self._terms[m]) for m in mons], dtype=np.float64)
        return table, coeffs


# functional interface mirroring the operator overloads


def add(f: TracePoly, g: TracePoly) -> TracePoly:
    return f + g


def mul(f: TracePoly, g: TracePoly) -> TracePoly:
    return f * g


def trace_map(f: TracePoly) -> TracePoly:
    return f.trace()


def degree(f: TracePoly) -> int:
    return f.degree()


def is_pure(f: TracePoly) -> bool:
    return f.is_pure()


X = TracePoly.x()
ONE = TracePoly.constant(1)
ZERO = TracePoly()


def Tr(f: TracePoly) -> TracePoly:
    return f.trace()


def trx(j: int) -> TracePoly:
    """The symbol ``Tr(x^j)``."""
    return TracePoly.tr(j)
