"""Exact checking of positivity certificates, and a random search for
counterexamples to claimed positivity.

A certificate is a sum of positive rational multiples of products of
generators.  Each factor carries a tag saying which generator family it
comes from:

``square``      ``g*g`` for a trace polynomial ``g``
``trsquare``    ``Tr(g*g)``
``constraint``  a pure constraint ``s`` (must belong to the declared set)
``sigma``       ``sigma(j, Han_d)``, the j-th characteristic coefficient

Nothing in this module uses a tolerance except :func:`numeric_falsify`
and :func:`search_common_zero`, which are explicitly numeric.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .evaluation import EvalPoint, eval_point, eval_points
from .hankel import hankel_symbolic, sigma
from .moments import (
    DiagonalWitness,
    MomentError,
    build_witness,
    perturb_moments,
)
from .parser import format_poly, parse
from .ring import ZERO, TracePoly

FACTOR_KINDS = ("square", "trsquare", "constraint", "sigma")
MODE_KINDS = {
    "P": frozenset({"square", "constraint", "sigma"}),
    "Q": frozenset({"square", "trsquare", "constraint"}),
}
NEGATIVE_THRESHOLD = -1e-10
SAMPLE_SCALE = 3.0


class CertificateStructureError(ValueError):
    """A certificate is malformed or uses generators its mode does not allow."""


@lru_cache(maxsize=64)
def _sigma_generator(j: int, d: int) -> TracePoly:
    return sigma(j, hankel_symbolic(d))


@dataclass(frozen=True)
class Factor:
    kind: str
    payload: object  # TracePoly, or (j, d) for sigma

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise CertificateStructureError(f"unknown factor kind {self.kind!r}")
        if self.kind == "sigma":
            j, d = self.payload
            if not (isinstance(j, int) and isinstance(d, int)) or d < 0 or not 1 <= j <= d + 1:
                raise CertificateStructureError(f"sigma needs 1 <= j <= d+1, got j={j}, d={d}")
        elif not isinstance(self.payload, TracePoly):
            raise CertificateStructureError(f"{self.kind} factor needs a TracePoly payload")
        elif self.kind == "constraint" and not self.payload.is_pure():
            raise CertificateStructureError(f"constraint {self.payload} is not pure")

    @classmethod
    def square(cls, g: TracePoly) -> "Factor":
        return cls("square", g)

    @classmethod
    def trsquare(cls, g: TracePoly) -> "Factor":
        return cls("trsquare", g)

    @classmethod
    def constraint(cls, s: TracePoly) -> "Factor":
        return cls("constraint", s)

    @classmethod
    def sigma(cls, j: int, d: int) -> "Factor":
        return cls("sigma", (j, d))

    def expand(self) -> TracePoly:
        if self.kind == "square":
            return self.payload * self.payload
        if self.kind == "trsquare":
            return (self.payload * self.payload).trace()
        if self.kind == "constraint":
            return self.payload
        return _sigma_generator(*self.payload)

    def to_json(self) -> dict:
        if self.kind == "sigma":
            j, d = self.payload
            return {"kind": "sigma", "payload": {"j": j, "d": d}}
        return {"kind": self.kind, "payload": format_poly(self.payload)}

    @classmethod
    def from_json(cls, doc: dict) -> "Factor":
        kind = doc.get("kind")
        payload = doc.get("payload")
        if kind == "sigma":
            if not isinstance(payload, dict):
                raise CertificateStructureError('sigma payload must be {"j": .., "d": ..}')
            return cls(kind, (payload.get("j"), payload.get("d")))
        if not isinstance(payload, str):
            raise CertificateStructureError(f"{kind} payload must be an expression string")
        return cls(kind, parse(payload))


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    factors: tuple[Factor, ...] = ()

    def __post_init__(self):
        if isinstance(self.coeff, bool) or not isinstance(self.coeff, (int, Fraction)):
            raise CertificateStructureError("term coefficients must be exact rationals")
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.coeff <= 0:
            raise CertificateStructureError(f"term coefficient {self.coeff} is not positive")

    def expand(self) -> TracePoly:
        out = TracePoly.constant(self.coeff)
        for fac in self.factors:
            out = out * fac.expand()
        return out


@dataclass(frozen=True)
class CertificateExpr:
    terms: tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __add__(self, other: "CertificateExpr") -> "CertificateExpr":
        return CertificateExpr(self.terms + other.terms)

    def kinds(self) -> set[str]:
        return {f.kind for t in self.terms for f in t.factors}

    def constraints(self) -> list[TracePoly]:
        return [f.payload for t in self.terms for f in t.factors if f.kind == "constraint"]

    def to_json(self) -> dict:
        return {
            "terms": [
                {"coeff": str(t.coeff), "factors": [f.to_json() for f in t.factors]}
                for t in self.terms
            ]
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CertificateExpr":
        if not isinstance(doc, dict) or not isinstance(doc.get("terms"), list):
            raise CertificateStructureError('certificate expression needs a "terms" list')
        terms = []
        for t in doc["terms"]:
            coeff = t.get("coeff")
            if isinstance(coeff, bool) or not isinstance(coeff, (str, int)):
                raise CertificateStructureError('"coeff" must be an integer or a "p/q" string')
            try:
                coeff = Fraction(coeff)
            except (ValueError, ZeroDivisionError):
                raise CertificateStructureError(f"bad coefficient {t.get('coeff')!r}") from None
            terms.append(Term(coeff, tuple(Factor.from_json(f) for f in t.get("factors", []))))
        return cls(tuple(terms))


def term(coeff, *factors: Factor) -> CertificateExpr:
    """One-term certificate, e.g. ``term(2, Factor.square(x))``."""
    return CertificateExpr((Term(Fraction(coeff), factors),))


def expand(c: CertificateExpr) -> TracePoly:
    total = ZERO
    for t in c.terms:
        total = total + t.expand()
    return total


def verify_identity(lhs: TracePoly, rhs: TracePoly) -> bool:
    return (lhs - rhs).is_zero()


# -- Krivine-Stengle style certificates ---------------------------------------------


@dataclass(frozen=True)
class KsCertificate:
    """Claims ``p1 * f == f**(2k) + p2`` with ``p1, p2`` in the preordering
    named by ``mode`` (``"P"``: constraints and sigma generators; ``"Q"``:
    constraints and traces of squares)."""

    f: TracePoly
    k: int
    p1: CertificateExpr
    p2: CertificateExpr
    S: tuple[TracePoly, ...] = ()
    mode: str = "P"

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(self.S))


@dataclass(frozen=True)
class QuotientCertificate:
    """Claims ``q * f == r`` with ``q, r`` in the Q-preordering and ``q != 0``."""

    f: TracePoly
    q: CertificateExpr
    r: CertificateExpr
    S: tuple[TracePoly, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(self.S))


@dataclass
class CheckReport:
    structural_errors: list[str] = field(default_factory=list)
    identity: bool | None = None

    @property
    def ok(self) -> bool:
        return not self.structural_errors and bool(self.identity)

    def as_dict(self) -> dict:
        return {
            "verified": self.ok,
            "structural_errors": list(self.structural_errors),
            "identity": self.identity,
        }


def _structure(expr: CertificateExpr, name: str, mode: str, S: Sequence[TracePoly]) -> list[str]:
    errors = []
    allowed = MODE_KINDS[mode]
    for kind in sorted(expr.kinds() - allowed):
        errors.append(f"{name}: {kind} factors are not generators in mode {mode}")
    known = set(S)
    for s in expr.constraints():
        if s not in known:
            errors.append(f"{name}: constraint {s} is not in S")
    return errors


def check_ks(cert: KsCertificate) -> CheckReport:
    report = CheckReport()
    if cert.mode not in MODE_KINDS:
        report.structural_errors.append(f"unknown mode {cert.mode!r}")
        return report
    if isinstance(cert.k, bool) or not isinstance(cert.k, int) or cert.k < 0:
        report.structural_errors.append(f"k must be a natural number, got {cert.k!r}")
        return report
    report.structural_errors += _structure(cert.p1, "p1", cert.mode, cert.S)
    report.structural_errors += _structure(cert.p2, "p2", cert.mode, cert.S)
    report.identity = verify_identity(expand(cert.p1) * cert.f, cert.f ** (2 * cert.k) + expand(cert.p2))
    return report


def verify_ks(cert: KsCertificate) -> bool:
    """Exact check of ``p1 f = f^(2k) + p2``.

    Raises :class:`CertificateStructureError` when the certificate uses
    generators outside its mode; returns ``False`` when only the identity fails.
    """
    report = check_ks(cert)
    if report.structural_errors:
        raise CertificateStructureError("; ".join(report.structural_errors))
    return bool(report.identity)


def check_quotient(cert: QuotientCertificate) -> CheckReport:
    report = CheckReport()
    report.structural_errors += _structure(cert.q, "q", "Q", cert.S)
    report.structural_errors += _structure(cert.r, "r", "Q", cert.S)
    q = expand(cert.q)
    if q.is_zero():
        report.structural_errors.append("q expands to 0")
    report.identity = verify_identity(q * cert.f, expand(cert.r))
    return report


def verify_quotient(cert: QuotientCertificate) -> bool:
    """Exact check of ``q f = r``; ``q != 0`` is tested symbolically."""
    report = check_quotient(cert)
    if report.structural_errors:
        raise CertificateStructureError("; ".join(report.structural_errors))
    return bool(report.identity)


def load_certificate(text: str) -> KsCertificate | QuotientCertificate:
    """Read a certificate file.

    Krivine-Stengle form: ``{"mode": "P"|"Q", "f", "k", "constraints", "p1", "p2"}``;
    quotient form: ``{"mode": "quotient", "f", "constraints", "q", "r"}``.
    Expressions are strings in the usual syntax.
    """
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise CertificateStructureError("certificate file must hold a JSON object")
    mode = doc.get("mode", "P")
    try:
        f = parse(doc["f"])
        S = tuple(parse(s) for s in doc.get("constraints", []))
        if mode == "quotient":
            return QuotientCertificate(
                f, CertificateExpr.from_json(doc["q"]), CertificateExpr.from_json(doc["r"]), S
            )
        return KsCertificate(
            f, doc.get("k", 1), CertificateExpr.from_json(doc["p1"]),
            CertificateExpr.from_json(doc.get("p2", {"terms": []})), S, mode,
        )
    except KeyError as exc:
        raise CertificateStructureError(f"certificate file is missing {exc}") from None


def dump_certificate(cert: KsCertificate | QuotientCertificate) -> dict:
    base = {"f": format_poly(cert.f), "constraints": [format_poly(s) for s in cert.S]}
    if isinstance(cert, QuotientCertificate):
        return {"mode": "quotient", **base, "q": cert.q.to_json(), "r": cert.r.to_json()}
    return {"mode": cert.mode, **base, "k": cert.k, "p1": cert.p1.to_json(), "p2": cert.p2.to_json()}


# -- numeric falsification -----------------------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    """A point ``beta`` with ``f[beta] < 0`` drawn from an atomic measure.

    ``witness`` is a diagonal matrix whose first basis vector ``e1`` gives
    ``e1^T f(X) e1 = witness_value < 0``, when one could be built.
    """

    trial: int
    beta0: float
    moments: tuple[float, ...]
    value: float
    atoms: tuple[float, ...]
    weights: tuple[float, ...]
    witness: DiagonalWitness | None = None
    witness_value: float | None = None

    def as_dict(self) -> dict:
        out = {
            "trial": self.trial,
            "beta0": self.beta0,
            "moments": list(self.moments),
            "value": self.value,
            "measure": {"atoms": list(self.atoms), "weights": list(self.weights)},
        }
        if self.witness is not None:
            out["witness"] = self.witness.as_dict()
            out["witness_value"] = self.witness_value
        return out


def _needed_d(f: TracePoly, S: Sequence[TracePoly]) -> int:
    top = max([f.max_index, *(s.max_index for s in S), 1])
    return (top + 1) // 2


def _sample_batch(rng: np.random.Generator, count: int, d: int):
    slots = d + 2
    k = rng.integers(1, slots + 1, size=count)
    atoms = rng.normal(0.0, SAMPLE_SCALE, size=(count, slots))
    raw = rng.standard_exponential(size=(count, slots))
    raw[np.arange(slots)[None, :] >= k[:, None]] = 0.0
    weights = raw / raw.sum(axis=1, keepdims=True)
    powers = atoms[:, :, None] ** np.arange(1, 2 * d + 1)[None, None, :]
    moments = np.einsum("ns,nsj->nj", weights, powers)
    pick = rng.integers(0, slots, size=count) % k
    use_atom = rng.random(count) < 0.5
    beta0 = np.where(use_atom, atoms[np.arange(count), pick], rng.normal(0.0, SAMPLE_SCALE, count))
    return k, atoms, weights, moments, beta0


def _exact_value(f, S, beta0, atoms, weights, k):
    """``f[beta]`` in rational arithmetic at the sampled measure, or ``None``
    if the point violates a constraint exactly."""
    ws = [Fraction(float(w)) for w in weights]
    total = sum(ws)
    ws = [w / total for w in ws]
    xs = [Fraction(float(a)) for a in atoms]
    gamma = [sum((w * a**j for w, a in zip(ws, xs)), Fraction(0)) for j in range(1, k + 1)]
    point = EvalPoint(Fraction(float(beta0)), gamma)
    if any(eval_point(s, point) < 0 for s in S):
        return None
    return eval_point(f, point)


def _witness_for(f, S, beta0, gamma, eps):
    """Diagonal matrix with ``e1^T f(X) e1 < 0``, or ``(None, None)``."""
    for delta in (0.0, 1e-6, 1e-4, 1e-2):
        moved = perturb_moments(gamma, delta) if delta else list(gamma)
        if float(eval_point(f, EvalPoint(beta0, moved))) >= NEGATIVE_THRESHOLD:
            break
        try:
            wit = build_witness(EvalPoint(beta0, moved), S, eps)
        except (MomentError, ValueError):
            continue
        got = wit.moments(len(gamma))
        val = float(eval_point(f, EvalPoint(wit.designated, got)))
        if val < 0:
            return wit, val
    return None, None


def numeric_falsify(
    f: TracePoly,
    S: Sequence[TracePoly] = (),
    trials: int = 10_000,
    seed: int = 0,
    *,
    witness: bool = True,
    witness_eps: float = 1e-3,
    batch: int = 4096,
) -> Counterexample | None:
    """Random search for ``beta`` in ``R x L_S`` with ``f[beta] < -1e-10``.

    Moment vectors come from random atomic measures (1 to d+2 atoms, Gaussian
    atoms of scale 3, uniform Dirichlet weights); those violating a constraint
    are discarded and count as spent trials.  ``None`` means no counterexample
    was found, which proves nothing.
    """
    S = tuple(S)
    for s in S:
        if not s.is_pure():
            raise ValueError(f"constraint {s} is not pure")
    d = _needed_d(f, S)
    rng = np.random.default_rng(seed)
    done = 0
    while done < trials:
        count = min(batch, trials - done)
        k, atoms, weights, moments, beta0 = _sample_batch(rng, count, d)
        ok = np.ones(count, dtype=bool)
        for s in S:
            ok &= eval_points(s, np.zeros(count), moments) >= 0
        vals = eval_points(f, beta0, moments)
        for i in np.flatnonzero(ok & (vals < NEGATIVE_THRESHOLD)):
            i = int(i)
            kk = int(k[i])
            exact = _exact_value(f, S, beta0[i], atoms[i, :kk], weights[i, :kk], 2 * d)
            if exact is None or exact >= NEGATIVE_THRESHOLD:
                continue  # rounding noise, not a counterexample
            gamma = [float(v) for v in moments[i]]
            wit, wval = (None, None)
            if witness:
                wit, wval = _witness_for(f, S, float(beta0[i]), gamma, witness_eps)
            return Counterexample(
                done + i, float(beta0[i]), tuple(gamma), float(exact),
                tuple(float(a) for a in atoms[i, :kk]),
                tuple(float(w) for w in weights[i, :kk]), wit, wval,
            )
        done += count
    return None


def search_common_zero(
    funcs: Sequence[Callable[[np.ndarray], np.ndarray]],
    trials: int,
    seed: int = 0,
    *,
    max_n: int = 6,
    tol: float = 1e-9,
) -> np.ndarray | None:
    """Look for a symmetric matrix of size ``<= max_n`` at which every function
    of the normalized moments is within ``tol`` of zero.

    Each ``funcs[i]`` maps an ``(N, k)`` array of moments ``Tr(X^1..X^k)``
    (``k = 2 * max_n``) to ``N`` values.  Half the samples are Gaussian
    matrices, half are orthogonal projections plus small noise, which is where
    such constraints tend to come close to vanishing.  Returns the first
    matrix found, or ``None``.
    """
    rng = np.random.default_rng(seed)
    k = 2 * max_n
    per_size = -(-trials // max_n)
    for n in range(1, max_n + 1):
        A = rng.normal(size=(per_size, n, n))
        X = 0.5 * (A + np.transpose(A, (0, 2, 1)))
        proj = rng.random(per_size) < 0.5
        if proj.any():
            Q, _ = np.linalg.qr(rng.normal(size=(int(proj.sum()), n, n)))
            rank = rng.integers(0, n + 1, size=int(proj.sum()))
            D = (np.arange(n)[None, :] < rank[:, None]).astype(float)
            P = np.einsum("nij,nj,nkj->nik", Q, D, Q)
            X[proj] = P + 1e-3 * X[proj]
        eig = np.linalg.eigvalsh(X)
        moments = np.stack([np.mean(eig**j, axis=1) for j in range(1, k + 1)], axis=1)
        hit = np.ones(per_size, dtype=bool)
        for fn in funcs:
            hit &= np.abs(fn(moments)) < tol
        idx = np.flatnonzero(hit)
        if idx.size:
            return X[int(idx[0])]
    return None


__all__ = [
    "CertificateExpr",
    "CertificateStructureError",
    "CheckReport",
    "Counterexample",
    "Factor",
    "KsCertificate",
    "QuotientCertificate",
    "Term",
    "check_ks",
    "check_quotient",
    "dump_certificate",
    "expand",
    "load_certificate",
    "numeric_falsify",
    "search_common_zero",
    "term",
    "verify_identity",
    "verify_ks",
    "verify_quotient",
]
