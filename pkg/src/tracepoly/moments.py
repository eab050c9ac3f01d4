"""Truncated Hamburger moments, rational weights and diagonal matrix witnesses.

The pipeline behind :func:`build_witness`:

1. recover a ``(d+1)``-atomic probability measure from ``2d`` moments
   (Golub-Welsch: Cholesky of the Hankel matrix gives a Jacobi matrix);
2. approximate the weights by ``m_i / n`` with ``sum m_i = n - 1``;
3. spend the last ``1/n`` of mass on an atom at ``beta0`` and read the
   result as an ``n x n`` diagonal matrix, stored compactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import kernels
from .evaluation import EvalPoint, eval_point, eval_pure
from .hankel import hankel_numeric
from .ring import TracePoly


class MomentError(ValueError):
    """Moment data outside the domain of an operation."""


class NotPositiveDefiniteError(MomentError):
    """The Hankel matrix of the moments is not positive definite.

    Perturb towards the interior first, e.g. with :func:`perturb_moments`.
    """


class NotInteriorError(MomentError):
    pass


class WitnessError(MomentError):
    pass


# -- measures -----------------------------------------------------------------


@dataclass(frozen=True)
class AtomicMeasure:
    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if len(atoms) != len(weights) or not atoms:
            raise ValueError("need the same positive number of atoms and weights")
        if any(not w > 0 for w in weights):
            raise ValueError("weights must be positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(weights)!r}, not 1")
        if any(b <= a for a, b in zip(atoms, atoms[1:])):
            raise ValueError("atoms must be strictly increasing")

    def moments(self, k: int) -> list[float]:
        """``[int t dmu, ..., int t^k dmu]``."""
        return [
            math.fsum(w * a**j for a, w in zip(self.atoms, self.weights))
            for j in range(1, k + 1)
        ]

    @classmethod
    def from_points(cls, atoms: Sequence[float], weights: Sequence[float]) -> "AtomicMeasure":
        """Sort, merge coincident atoms and normalise weights."""
        acc: dict[float, float] = {}
        for a, w in zip(atoms, weights):
            acc[float(a)] = acc.get(float(a), 0.0) + float(w)
        items = sorted(acc.items())
        total = math.fsum(w for _, w in items)
        return cls(tuple(a for a, _ in items), tuple(w / total for _, w in items))


def moment_scales(gamma: Sequence[float]) -> list[float]:
    """Natural magnitude of each moment, used for relative errors.

    Even moments are their own scale; an odd moment is bounded by the
    geometric mean of its even neighbours (Cauchy-Schwarz).
    """
    full = [1.0] + [float(g) for g in gamma]
    out = []
    for j in range(1, len(full)):
        if j % 2 == 0:
            out.append(abs(full[j]))
        elif j + 1 < len(full):
            out.append(math.sqrt(abs(full[j - 1] * full[j + 1])))
        else:
            out.append(max(abs(full[j]), math.sqrt(abs(full[j - 1]))))
    return [max(s, 1e-300) for s in out]


def relative_moment_errors(measure: AtomicMeasure, gamma: Sequence[float]) -> list[float]:
    got = measure.moments(len(gamma))
    return [abs(a - float(b)) / s for a, b, s in zip(got, gamma, moment_scales(gamma))]


# -- truncated Hamburger problem --------------------------------------------------


def _jacobi_from_cholesky(R, d, zero):
    """Recurrence coefficients from the Cholesky factor of the Hankel matrix."""
    diag, off = [], []
    for k in range(d):
        a = R[k][k + 1] / R[k][k]
        if k:
            a -= R[k - 1][k] / R[k - 1][k - 1]
        diag.append(a)
        off.append(R[k + 1][k + 1] / R[k][k])
    # free parameter: last diagonal entry
    diag.append(sum(diag, zero) / d if d else zero)
    return diag, off


def _cholesky_upper(H, sqrt, zero):
    m = len(H)
    R = [[zero] * m for _ in range(m)]
    for i in range(m):
        s = H[i][i] - sum((R[k][i] * R[k][i] for k in range(i)), zero)
        if not s > 0:
            raise NotPositiveDefiniteError(
                f"Hankel matrix is not positive definite (pivot {i} is {float(s):.3e}); "
                "perturb the moments towards the interior first"
            )
        R[i][i] = sqrt(s)
        for j in range(i + 1, m):
            R[i][j] = (H[i][j] - sum((R[k][i] * R[k][j] for k in range(i)), zero)) / R[i][i]
    return R


def _solve_float(gamma, d):
    full = [1.0] + list(gamma)
    H = [[full[i + j] for j in range(d + 1)] for i in range(d + 1)]
    R = _cholesky_upper(H, math.sqrt, 0.0)
    diag, off = _jacobi_from_cholesky(R, d, 0.0)
    J = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    w, V = kernels.jacobi_eigh(J)
    return list(w), list(V[0, :] ** 2)


def _solve_mp(gamma, d, dps):
    with mpmath.workdps(dps):
        full = [mpmath.mpf(1)] + [mpmath.mpf(g) for g in gamma]
        H = [[full[i + j] for j in range(d + 1)] for i in range(d + 1)]
        R = _cholesky_upper(H, mpmath.sqrt, mpmath.mpf(0))
        diag, off = _jacobi_from_cholesky(R, d, mpmath.mpf(0))
        J = mpmath.zeros(d + 1, d + 1)
        for i in range(d + 1):
            J[i, i] = diag[i]
            if i < d:
                J[i, i + 1] = J[i + 1, i] = off[i]
        E, Q = mpmath.eigsy(J)
        atoms = [float(E[i]) for i in range(d + 1)]
        weights = [float(Q[0, i] ** 2) for i in range(d + 1)]
    return atoms, weights


def solve_hamburger(gamma: Sequence[float], *, rtol: float = 1e-10, dps: int = 50) -> AtomicMeasure:
    """A ``(d+1)``-atomic probability measure with moments ``gamma_1..gamma_2d``.

    ``gamma`` must have even length ``2d`` and a positive definite Hankel
    matrix.  A float computation is tried first; if its relative moment
    residual exceeds ``rtol`` the computation is redone with ``dps`` digits.
    """
    gamma = [float(g) for g in gamma]
    if len(gamma) % 2:
        raise MomentError(f"moment vector must have even length, got {len(gamma)}")
    if not all(math.isfinite(g) for g in gamma):
        raise MomentError("moments must be finite")
    d = len(gamma) // 2
    if d == 0:
        return AtomicMeasure((0.0,), (1.0,))
    measure = None
    try:
        atoms, weights = _solve_float(gamma, d)
        if all(w > 0 for w in weights):
            measure = AtomicMeasure.from_points(atoms, weights)
            if len(measure.atoms) != d + 1 or max(relative_moment_errors(measure, gamma)) > rtol:
                measure = None
    except NotPositiveDefiniteError:
        measure = None
    if measure is None:
        atoms, weights = _solve_mp(gamma, d, dps)
        measure = AtomicMeasure.from_points(atoms, weights)
    return measure


# -- rational weights ---------------------------------------------------------------


@dataclass(frozen=True)
class RationalizedMeasure:
    """``(1/n) delta_beta0 + sum (m_i/n) delta_alpha_i``."""

    n: int
    multiplicities: tuple[int, ...]
    atoms: tuple[float, ...]
    extra_atom: float
    eps_tilde: float | Fraction

    def conditions_hold(self, weights: Sequence[float]) -> bool:
        """Check the three defining conditions in exact rational arithmetic."""
        return rational_conditions_hold(
            self.n, self.multiplicities, weights, self.extra_atom, self.eps_tilde
        )


def rational_conditions_hold(n, mults, weights, beta0, eps_tilde) -> bool:
    """``|n l_i - m_i| < n e``, ``sum m_i = n - 1`` and ``|beta0| < n e``."""
    e = Fraction(eps_tilde)
    bound = n * e
    if sum(mults) != n - 1 or any(m < 0 for m in mults):
        return False
    if not abs(Fraction(beta0)) < bound:
        return False
    return all(abs(n * Fraction(w) - m) < bound for w, m in zip(weights, mults))


def rationalize(measure: AtomicMeasure, beta0: float, eps_tilde: float) -> RationalizedMeasure:
    """Smallest ``n`` (and multiplicities) meeting the rational-weight conditions.

    Scanning starts at a lower bound no valid ``n`` can undercut and stops at
    a bound where a solution is guaranteed.  The conditions are decided
    exactly on the value of ``eps_tilde`` as given, so a float ``0.1`` (which
    is slightly above 1/10) can admit an ``n`` that ``Fraction(1, 10)`` does not.
    """
    if not eps_tilde > 0:
        raise ValueError("eps_tilde must be positive")
    lam = np.array(measure.weights)
    k = len(lam)
    b = abs(float(beta0))
    # the float scan is slightly permissive; the exact check has the last word
    eps_scan = float(eps_tilde) * (1 + 1e-12)
    # the signed deviations sum to 1, so the largest is at least 1/k
    n_lo = max(1, int(math.floor(max(b, 1.0 / k) / eps_scan)))
    n_hi = int(math.floor(max(b, 1.0) / float(eps_tilde))) + 3
    n = n_lo
    while n < n_hi:
        found, m = kernels.scan_denominators(lam, b, eps_scan, n, n_hi)
        if found < 0:
            break
        mults = tuple(int(v) for v in m)
        if rational_conditions_hold(found, mults, measure.weights, beta0, eps_tilde):
            return RationalizedMeasure(found, mults, measure.atoms, float(beta0), eps_tilde)
        n = found + 1
    raise WitnessError("no admissible denominator found (floating point breakdown)")


# -- witnesses ------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalWitness:
    """Diagonal matrix stored as (eigenvalue, multiplicity) pairs.

    The first pair is the designated eigenvalue with multiplicity 1, so
    ``(eigenvalues[0][0], e_1)`` is an eigenpair of the dense matrix.
    """

    eigenvalues: tuple[tuple[float, int], ...]
    n: int
    achieved_errors: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if sum(m for _, m in self.eigenvalues) != self.n:
            raise ValueError("multiplicities must sum to n")
        if any(m <= 0 for _, m in self.eigenvalues):
            raise ValueError("multiplicities must be positive")

    @property
    def designated(self) -> float:
        return self.eigenvalues[0][0]

    def moments(self, k: int) -> list[float]:
        return [
            math.fsum(m * v**j for v, m in self.eigenvalues) / self.n for j in range(1, k + 1)
        ]

    def exact_moments(self, k: int) -> list[Fraction]:
        vals = [(Fraction(v), m) for v, m in self.eigenvalues]
        return [sum((m * v**j for v, m in vals), Fraction(0)) / self.n for j in range(1, k + 1)]

    def distinct_eigenvalues(self) -> int:
        return len({v for v, _ in self.eigenvalues})

    def to_dense(self, max_n: int = 4096) -> np.ndarray:
        if self.n > max_n:
            raise ValueError(f"witness has size {self.n} > {max_n}")
        diag = [v for v, m in self.eigenvalues for _ in range(m)]
        return np.diag(diag)

    def as_dict(self) -> dict:
        return {
            "eigenvalues": [{"value": v, "mult": m} for v, m in self.eigenvalues],
            "n": self.n,
            "achieved_errors": list(self.achieved_errors),
        }


def witness_from_rationalized(rat: RationalizedMeasure) -> DiagonalWitness:
    pairs = [(rat.extra_atom, 1)] + [
        (a, m) for a, m in zip(rat.atoms, rat.multiplicities) if m > 0
    ]
    return DiagonalWitness(tuple(pairs), rat.n)


def _hankel_min_eig(gamma) -> float:
    H = hankel_numeric(gamma)
    return float(np.linalg.eigvalsh(H)[0])


def build_witness(
    beta: EvalPoint,
    S: Sequence[TracePoly] = (),
    eps: float = 1e-3,
    g: TracePoly | None = None,
    *,
    max_halvings: int = 60,
) -> DiagonalWitness:
    """Diagonal matrix ``X`` whose normalized moments are within ``eps`` of
    ``beta.moments``, with ``beta.beta0`` as an eigenvalue and every ``s`` in
    ``S`` nonnegative at ``X``.

    ``beta.moments`` must be interior: ``s > 0`` for all ``s`` in ``S`` and a
    positive definite Hankel matrix.  No perturbation is attempted here.
    When ``g`` is given, ``g`` must not vanish at the witness point.
    """
    gamma = [float(v) for v in beta.moments]
    beta0 = float(beta.beta0)
    if len(gamma) % 2:
        raise MomentError("moment vector must have even length 2d")
    if not eps > 0:
        raise ValueError("eps must be positive")
    d = len(gamma) // 2
    for i, s in enumerate(S):
        if not s.is_pure():
            raise NotInteriorError(f"constraint {i} ({s}) is not pure")
        if s.max_index > 2 * d:
            raise NotInteriorError(f"constraint {i} ({s}) needs more than {2 * d} moments")
        val = float(eval_pure(s, gamma))
        if not val > 0:
            raise NotInteriorError(f"constraint {i} ({s}) is not strictly positive: {val:.3e}")
    if d and not _hankel_min_eig(gamma) > 0:
        raise NotInteriorError("Hankel matrix is not positive definite")
    try:
        measure = solve_hamburger(gamma)
    except NotPositiveDefiniteError as exc:
        raise NotInteriorError(str(exc)) from None

    scale = 1.0 + max(max(abs(a) for a in measure.atoms), abs(beta0))
    eps_tilde = eps / (4 * (d + 2) * scale ** (2 * d))
    last = None
    for _ in range(max_halvings):
        rat = rationalize(measure, beta0, eps_tilde)
        wit = witness_from_rationalized(rat)
        got = wit.moments(2 * d)
        errors = tuple(abs(a - b) for a, b in zip(got, gamma))
        ok = all(e < eps for e in errors) and all(float(eval_pure(s, got)) >= 0 for s in S)
        if ok:
            wit = DiagonalWitness(wit.eigenvalues, wit.n, errors)
            if g is not None:
                gval = eval_point(g, EvalPoint(beta0, got))
                if gval == 0:
                    raise WitnessError("g vanishes at the witness point; perturb beta")
            return wit
        last = errors
        eps_tilde /= 2
    raise WitnessError(f"could not reach eps={eps} (last errors {last})")


def perturb_moments(gamma: Sequence[float], delta: float) -> list[float]:
    """Mix ``gamma`` with the moments of a fixed well-spread measure.

    The reference measure is uniform on ``d + 1`` equally spaced points of
    ``[-1, 1]``; its Hankel matrix is positive definite, so for ``delta`` in
    ``(0, 1]`` the mixture is interior whenever ``gamma`` was PSD.
    """
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    d = len(gamma) // 2
    if d == 0:
        return list(gamma)
    pts = np.linspace(-1.0, 1.0, d + 1)
    ref = AtomicMeasure(tuple(pts), tuple([1.0 / (d + 1)] * (d + 1))).moments(len(gamma))
    return [(1 - delta) * float(g) + delta * r for g, r in zip(gamma, ref)]


# -- the x^3 localization example -----------------------------------------------


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(A)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


@dataclass(frozen=True)
class X3Counterexample:
    d: int
    alpha: tuple[Fraction, ...]
    epsilon: Fraction

    def alpha_float(self) -> list[float]:
        return [float(a) for a in self.alpha]

    def hankel_matrix(self) -> np.ndarray:
        """``Han_{d+2}`` at ``alpha``."""
        return hankel_numeric(self.alpha_float())

    def localized_matrix(self) -> np.ndarray:
        """``Han_d^{x^3}`` at ``alpha``: entries ``alpha_(i+j+1)``."""
        a = self.alpha_float()
        return np.array([[a[i + j + 2] for j in range(self.d + 1)] for i in range(self.d + 1)])


def construct_x3_counterexample(d: int) -> X3Counterexample:
    """Moments ``alpha`` with both Hankel matrices PSD but ``alpha_1 < 0``.

    Uses the equal-weight measure on ``{1, ..., d+2}`` and the largest
    admissible ``epsilon = 1 / (b^T B^{-1} b)``, all in exact arithmetic.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if d > 6:
        raise ValueError("supported range is 1 <= d <= 6")
    atoms = range(1, d + 3)
    w = Fraction(1, d + 2)
    mu = [sum((w * a**k for a in atoms), Fraction(0)) for k in range(2 * d + 3)]
    beta = [Fraction(-1)] + [mu[i - 2] for i in range(2, 2 * d + 5)]  # beta[i-1] = beta_i

    def bt(i):
        return beta[i - 1]

    B = [[bt(i + j) for j in range(1, d + 3)] for i in range(1, d + 3)]
    b = [bt(i) for i in range(1, d + 3)]
    y = _solve_exact(B, b)
    eps = 1 / sum((bi * yi for bi, yi in zip(b, y)), Fraction(0))
    return X3Counterexample(d, tuple(eps * v for v in beta), eps)
