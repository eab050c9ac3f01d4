"""Minimising normalized traces over the moment spectrahedron.

``minimize_trace`` solves ``min Tr(p)[gamma]`` subject to ``Han_d[gamma] >= 0``
and affine pure constraints, which by the moment-witness construction equals
the infimum of ``Tr(p(X))`` over matrices of all sizes satisfying the
constraints.  The solver is a dense log-det barrier method: a phase-1 problem
finds a strictly feasible point, then the central path is followed with the
barrier weight multiplied by 5 per outer step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .moments import AtomicMeasure
from .ring import TracePoly

EQUALITY_WIDENING = 1e-9
BOUNDARY_TOL = 1e-7
DEFAULT_BOUND = 1e6


class NonAffineError(ValueError):
    """Constraint is not affine in the trace symbols.

    Such constraints cannot enter the SDP; test positivity claims about them
    with :func:`tracepoly.certify.numeric_falsify` instead.
    """


@dataclass(frozen=True)
class LmiBlock:
    """``const + sum_k y_k * coeffs[k]``, required to be PSD."""

    const: np.ndarray
    coeffs: np.ndarray  # shape (nvars, m, m)
    label: str = ""

    @property
    def size(self) -> int:
        return self.const.shape[0]

    def at(self, y: Sequence[float]) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return self.const + np.tensordot(y, self.coeffs, axes=(0, 0))

    def padded(self, nvars: int) -> "LmiBlock":
        extra = nvars - self.coeffs.shape[0]
        if extra <= 0:
            return self
        pad = np.zeros((extra,) + self.const.shape)
        return LmiBlock(self.const, np.concatenate([self.coeffs, pad]), self.label)


@dataclass(frozen=True)
class AffineForm:
    """Numeric affine function ``const + sum_j coeffs[j] * gamma_j`` (``j >= 1``).

    Unlike TracePoly this accepts float coefficients such as ``sqrt(2)``.
    """

    const: float
    coeffs: dict

    @classmethod
    def from_poly(cls, s: TracePoly) -> "AffineForm":
        const, coeffs = _affine_parts(s)
        return cls(float(const), {j: float(c) for j, c in coeffs.items()})

    def max_index(self) -> int:
        return max(self.coeffs, default=0)

    def __call__(self, gamma: Sequence[float]) -> float:
        return self.const + math.fsum(c * float(gamma[j - 1]) for j, c in self.coeffs.items())


@dataclass(frozen=True)
class SpectrahedronSpec:
    d: int
    blocks: tuple[LmiBlock, ...]
    widened: tuple[int, ...] = ()
    widening: float = 0.0

    def __post_init__(self):
        nv = 2 * self.d
        if not any(b.label == "hankel" for b in self.blocks):
            raise ValueError("spectrahedron needs the Hankel block")
        for b in self.blocks:
            if b.coeffs.shape != (nv,) + b.const.shape or b.const.shape[0] != b.const.shape[1]:
                raise ValueError(f"block {b.label!r} has inconsistent dimensions")

    @property
    def nvars(self) -> int:
        return 2 * self.d

    def min_eigenvalues(self, gamma) -> list[float]:
        return [float(np.linalg.eigvalsh(b.at(gamma))[0]) for b in self.blocks]


@dataclass
class SdpSolution:
    gamma_star: tuple
    value: float
    status: str  # optimal | infeasible | unbounded | max_iterations
    iterations: int = 0
    boundary: bool = False
    extra: tuple = ()
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "value": self.value if math.isfinite(self.value) else str(self.value),
            "gamma": list(self.gamma_star),
            "status": self.status,
            "iterations": self.iterations,
            "boundary": self.boundary,
            **({"epigraph": list(self.extra)} if self.extra else {}),
            **self.metadata,
        }


# -- compilation ------------------------------------------------------------------


def _affine_parts(s: TracePoly):
    if not s.is_pure():
        raise NonAffineError(f"{s} involves x; only pure constraints are allowed")
    const = s.constant_term()
    coeffs = {}
    for mono, c in s.terms.items():
        if not mono:
            continue
        if sum(mono) != 1:
            raise NonAffineError(
                f"{s} is not affine in the trace symbols; "
                "use certify.numeric_falsify for nonlinear constraints"
            )
        coeffs[len(mono) - 1] = c
    return const, coeffs


def hankel_block(d: int) -> LmiBlock:
    m = d + 1
    const = np.zeros((m, m))
    const[0, 0] = 1.0
    coeffs = np.zeros((2 * d, m, m))
    for i in range(m):
        for j in range(m):
            if i + j:
                coeffs[i + j - 1, i, j] = 1.0
    return LmiBlock(const, coeffs, "hankel")


def _scalar_block(form: AffineForm, nvars: int, label: str) -> LmiBlock:
    coeffs = np.zeros((nvars, 1, 1))
    for j, c in form.coeffs.items():
        coeffs[j - 1, 0, 0] = c
    return LmiBlock(np.array([[form.const]]), coeffs, label)


def compile_constraints(
    S: Sequence[TracePoly], d: int, widening: float = EQUALITY_WIDENING
) -> SpectrahedronSpec:
    """One 1x1 block per affine constraint, plus the Hankel block.

    Pairs ``s, -s`` (an equality written as two inequalities) are widened by
    ``widening`` so that a strict interior exists.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    forms = []
    for s in S:
        const, coeffs = _affine_parts(s)
        if any(j > 2 * d for j in coeffs):
            raise ValueError(f"{s} uses moments beyond index {2 * d}")
        forms.append(AffineForm(float(const), {j: float(c) for j, c in coeffs.items()}))
    widened = set()
    for a in range(len(S)):
        for b in range(a + 1, len(S)):
            if (S[a] + S[b]).is_zero():
                widened.update((a, b))
    blocks = []
    for i, (s, form) in enumerate(zip(S, forms)):
        if i in widened:
            form = AffineForm(form.const + widening, form.coeffs)
        blocks.append(_scalar_block(form, 2 * d, str(s)))
    blocks.append(hankel_block(d))
    return SpectrahedronSpec(d, tuple(blocks), tuple(sorted(widened)), widening if widened else 0.0)


# -- barrier machinery ---------------------------------------------------------------


class _Barrier:
    """Log-det barrier over a list of blocks ``(F0, F)`` with ``F`` of shape ``(n, m, m)``."""

    def __init__(self, blocks: list[tuple[np.ndarray, np.ndarray]]):
        self.blocks = blocks
        self.order = sum(F0.shape[0] for F0, _ in blocks)

    def mats(self, y):
        return [F0 + np.tensordot(y, F, axes=(0, 0)) for F0, F in self.blocks]

    def value(self, y) -> float:
        """``-sum log det``, or ``inf`` outside the interior."""
        total = 0.0
        for S in self.mats(y):
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                return math.inf
            diag = np.diagonal(L)
            if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
                return math.inf
            total -= 2.0 * float(np.sum(np.log(diag)))
        return total

    def derivatives(self, y):
        n = len(y)
        g = np.zeros(n)
        H = np.zeros((n, n))
        for (F0, F), S in zip(self.blocks, self.mats(y)):
            L = np.linalg.cholesky(S)
            Linv = np.linalg.solve(L, np.eye(S.shape[0]))
            Sinv = Linv.T @ Linv
            A = np.einsum("ij,kjl->kil", Sinv, F)
            g -= np.einsum("kii->k", A)
            H += np.einsum("kij,lji->kl", A, A)
        return g, H


def _newton_center(barrier, c, t, y, max_steps=200, tol=1e-11):
    steps = 0
    phi_y = t * float(c @ y) + barrier.value(y)
    for _ in range(max_steps):
        try:
            gb, Hb = barrier.derivatives(y)
        except np.linalg.LinAlgError:
            break
        g = t * c + gb
        H = Hb
        dscale = np.sqrt(np.maximum(np.diagonal(H), 1e-300))
        Hs = H / np.outer(dscale, dscale)
        try:
            step = -np.linalg.solve(Hs + 1e-14 * np.eye(len(y)), g / dscale) / dscale
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(Hs, g / dscale, rcond=None)[0] / dscale
        dec = -float(g @ step)
        steps += 1
        if dec / 2 <= tol or not np.isfinite(dec):
            break
        alpha = 1.0
        while alpha > 1e-16:
            y_new = y + alpha * step
            phi_new = t * float(c @ y_new) + barrier.value(y_new)
            if phi_new <= phi_y - 0.25 * alpha * dec:
                break
            alpha *= 0.5
        else:
            break
        stalled = phi_y - phi_new <= 1e-15 * max(1.0, abs(phi_y))
        y, phi_y = y_new, phi_new
        if stalled:
            break
    return y, steps


def _path_following(barrier, c, y0, gap_tol, t0=1.0, mu=5.0, max_outer=120, stop=None):
    """Returns ``(y, t, iterations, converged)``."""
    y, t, its = np.array(y0, dtype=np.float64), t0, 0
    for _ in range(max_outer):
        y, steps = _newton_center(barrier, c, t, y)
        its += steps
        if stop is not None and stop(y, t):
            return y, t, its, True
        if barrier.order / t < gap_tol:
            return y, t, its, True
        t *= mu
    return y, t, its, False


@dataclass
class _Problem:
    c: np.ndarray
    c0: float
    blocks: list  # list of (F0, F)
    y0: np.ndarray
    bound: float


def _box_blocks(nvars: int, bound: float):
    out = []
    for k in range(nvars):
        for sign in (1.0, -1.0):
            F = np.zeros((nvars, 1, 1))
            F[k, 0, 0] = -sign
            out.append((np.array([[bound]]), F))
    return out


def _strictly_feasible(blocks, y) -> bool:
    return _Barrier(blocks).value(y) < math.inf


def _phase1(prob: _Problem, gap_tol: float):
    """Find a strictly feasible point.  Returns ``(y, s_star, its)``.

    ``s_star < 0`` means ``y`` is strictly feasible; otherwise ``s_star``
    approximates the smallest uniform shift making the blocks PSD.
    """
    n = len(prob.y0)
    y0 = prob.y0
    if _strictly_feasible(prob.blocks, y0):
        return y0, -1.0, 0
    worst = min(float(np.linalg.eigvalsh(F0 + np.tensordot(y0, F, axes=(0, 0)))[0])
                for F0, F in prob.blocks)
    s0 = max(0.0, -worst) + 1.0
    shifted = []
    for F0, F in prob.blocks:
        m = F0.shape[0]
        Fs = np.concatenate([F, np.eye(m)[None, :, :]])
        shifted.append((F0, Fs))
    for F0, F in _box_blocks(n, prob.bound):
        shifted.append((F0, np.concatenate([F, np.zeros((1, 1, 1))])))
    lower = np.zeros((n + 1, 1, 1))
    lower[n, 0, 0] = 1.0
    shifted.append((np.array([[1.0]]), lower))  # s >= -1
    c = np.zeros(n + 1)
    c[n] = 1.0
    barrier = _Barrier(shifted)
    z, _, its, _ = _path_following(
        barrier, c, np.append(y0, s0), gap_tol * 1e-1,
        stop=lambda z, _t: z[n] < 0 and _strictly_feasible(prob.blocks, z[:n]),
    )
    return z[:n], float(z[n]), its


def _solve(prob: _Problem, gap_tol: float, max_outer: int = 120):
    n = len(prob.y0)
    y1, s_star, its1 = _phase1(prob, gap_tol)
    blocks = list(prob.blocks)
    boundary = False
    relax = 0.0
    if s_star >= 0:
        if s_star >= BOUNDARY_TOL:
            return None, "infeasible", its1, False, {"phase1_shift": s_star}
        # nonempty set without interior: solve a slightly relaxed problem
        boundary = True
        relax = max(s_star, 0.0) + 1e-9
        blocks = [(F0 + relax * np.eye(F0.shape[0]), F) for F0, F in blocks]
        if not _strictly_feasible(blocks, y1):
            relax = s_star + 1e-7
            blocks = [(F0 + relax * np.eye(F0.shape[0]), F) for F0, F in prob.blocks]
    box = _box_blocks(n, prob.bound)
    barrier = _Barrier(blocks + box)
    state = {}

    def runaway(y, t):
        # unbounded iff the artificial box binds and the optimum is sensitive to it
        slack = np.concatenate([prob.bound - y, prob.bound + y])
        binding = slack < 1e-3 * prob.bound
        if not np.any(binding):
            return False
        pull = float(np.sum(prob.bound / (t * slack[binding])))
        value = prob.c0 + float(prob.c @ y)
        state["box_sensitivity"] = pull
        return pull > 1e-3 * max(1.0, abs(value))

    # start from the analytic centre of the boxed set so that the path is
    # followed from a well-centred point even when the true optimum is far out
    y_ac, its_ac = _newton_center(barrier, prob.c, 0.0, y1, max_steps=500, tol=1e-3)
    t0 = 1.0 / (1.0 + float(np.abs(prob.c) @ (np.abs(y_ac) + 1.0)))
    y, t, its2, converged = _path_following(
        barrier, prob.c, y_ac, gap_tol, t0=t0, max_outer=max_outer, stop=runaway
    )
    its2 += its_ac
    meta = {"gap_bound": barrier.order / t}
    if boundary:
        meta["boundary_relaxation"] = relax
    if runaway(y, t):
        meta.update(state)
        return y, "unbounded", its1 + its2, boundary, meta
    if not converged:
        return y, "max_iterations", its1 + its2, boundary, meta
    return y, "optimal", its1 + its2, boundary, meta


def _reference_point(d: int) -> np.ndarray:
    if d == 0:
        return np.zeros(0)
    pts = np.linspace(-1.0, 1.0, d + 1)
    mu = AtomicMeasure(tuple(pts), tuple([1.0 / (d + 1)] * (d + 1)))
    return np.array(mu.moments(2 * d))


def _objective_parts(p, d: int):
    if isinstance(p, AffineForm):
        form = p
    else:
        form = AffineForm.from_poly(p.trace())
    if form.max_index() > 2 * d:
        raise ValueError(f"objective needs moments beyond index {2 * d}")
    c = np.zeros(2 * d)
    for j, v in form.coeffs.items():
        c[j - 1] = v
    return form.const, c


def minimize_trace(
    p: TracePoly,
    spec: SpectrahedronSpec,
    *,
    tol: float = 1e-9,
    bound: float = DEFAULT_BOUND,
) -> SdpSolution:
    """Minimise ``Tr(p)[gamma]`` over the spectrahedron ``spec``.

    ``p`` is a polynomial in ``x`` of degree at most ``2d`` (any trace
    polynomial whose trace is affine in the moments is accepted).
    """
    c0, c = _objective_parts(p, spec.d)
    return _run(c0, c, [(b.const, b.coeffs) for b in spec.blocks], _reference_point(spec.d),
                spec, tol, bound, n_epi=0)


def minimize_quadratic(
    p,
    squares: Sequence,
    spec: SpectrahedronSpec,
    *,
    tol: float = 1e-9,
    bound: float = DEFAULT_BOUND,
) -> SdpSolution:
    """Minimise ``Tr(p)[gamma] + sum_i l_i(gamma)^2`` over ``spec``.

    Each square gets an epigraph variable ``t_i`` with ``[[1, l_i], [l_i, t_i]] >= 0``.
    ``p`` may be ``None`` (no affine part); squares are AffineForm or affine TracePoly.
    """
    d = spec.d
    nv = 2 * d
    k = len(squares)
    if p is None:
        c0, c = 0.0, np.zeros(nv)
    else:
        c0, c = _objective_parts(p, d)
    forms = [q if isinstance(q, AffineForm) else AffineForm.from_poly(q) for q in squares]
    for q in forms:
        if q.max_index() > nv:
            raise ValueError(f"square term needs moments beyond index {nv}")
    total = nv + k
    blocks = [(b.const, b.padded(total).coeffs) for b in spec.blocks]
    for i, q in enumerate(forms):
        F0 = np.array([[1.0, q.const], [q.const, 0.0]])
        F = np.zeros((total, 2, 2))
        for j, v in q.coeffs.items():
            F[j - 1, 0, 1] = F[j - 1, 1, 0] = v
        F[nv + i, 1, 1] = 1.0
        blocks.append((F0, F))
    ref = _reference_point(d)
    y0 = np.concatenate([ref, [q(ref) ** 2 + 1.0 for q in forms]])
    cc = np.concatenate([c, np.ones(k)])
    return _run(c0, cc, blocks, y0, spec, tol, bound, n_epi=k)


def _run(c0, c, blocks, y0, spec, tol, bound, n_epi) -> SdpSolution:
    prob = _Problem(np.asarray(c, dtype=np.float64), float(c0), blocks, np.asarray(y0), bound)
    y, status, its, boundary, meta = _solve(prob, tol)
    if spec.widening:
        meta["equality_widening"] = spec.widening
    nv = 2 * spec.d
    if y is None:
        return SdpSolution((), math.nan, status, its, boundary, (), meta)
    gamma = tuple(float(v) for v in y[:nv])
    extra = tuple(float(v) for v in y[nv:])
    if status == "unbounded":
        return SdpSolution(gamma, -math.inf, status, its, boundary, extra, meta)
    value = prob.c0 + float(prob.c @ y)
    return SdpSolution(gamma, value, status, its, boundary, extra, meta)


def objective_value(p, squares: Sequence, gamma: Sequence[float]) -> float:
    """``Tr(p)[gamma] + sum l_i(gamma)^2`` evaluated directly."""
    val = 0.0
    if p is not None:
        form = p if isinstance(p, AffineForm) else AffineForm.from_poly(p.trace())
        val += form(gamma)
    for q in squares:
        q = q if isinstance(q, AffineForm) else AffineForm.from_poly(q)
        val += q(gamma) ** 2
    return val
