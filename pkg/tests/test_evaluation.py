import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_orthogonal, random_sym, trace_polys
from tracepoly.evaluation import (
    DimensionError,
    EvalPoint,
    as_sym_matrix,
    dump_matrix_json,
    eval_matrix,
    eval_point,
    eval_points,
    eval_pure,
    load_matrix_json,
    normalized_moments,
)
from tracepoly.parser import parse

F_VANISH = parse("x^2-2*Tr(x)*x+2*Tr(x)^2-Tr(x^2)")


class TestMatrix:
    def test_scalar_matrix_cancels(self):
        out = eval_matrix(F_VANISH, 2.5 * np.eye(4))
        assert np.allclose(out, 0)

    def test_diag_plus_minus_one(self):
        assert np.array_equal(eval_matrix(F_VANISH, as_sym_matrix([[1, 0], [0, -1]])), np.zeros((2, 2), dtype=object))

    def test_pure_is_scalar(self):
        out = eval_matrix(parse("Tr(x^2)"), as_sym_matrix([[1, 0, 0], [0, 2, 0], [0, 0, 3]]))
        assert all(out[i, i] == Fraction(14, 3) for i in range(3))
        assert out[0, 1] == 0

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            eval_matrix(parse("x"), np.zeros((0, 0)))

    def test_result_symmetric(self):
        rng = np.random.default_rng(1)
        X = random_sym(rng, 5)
        out = eval_matrix(parse("Tr(x)*x^3-x^2*Tr(x^4)+x"), X)
        assert np.allclose(out, out.T, atol=1e-12)


class TestPoint:
    def test_examples(self):
        assert eval_point(parse("Tr(x^2)-Tr(x)^2"), EvalPoint(0, (0, 1))) == 1
        assert eval_point(parse("x-Tr(x)"), EvalPoint(2, (1,))) == 1
        assert eval_pure(parse("Tr(x)"), (3, 7)) == 3

    def test_sigma2_at_diag_plus_minus_one(self):
        # moments of diag(1, -1) are (0, 1, 0, 1); Han_2 there has eigenvalues 2, 1, 0
        f = parse("Tr(x^4)*Tr(x^2)-Tr(x^3)^2+Tr(x^4)-Tr(x^2)^2+Tr(x^2)-Tr(x)^2")
        assert eval_pure(f, (0, 1, 0, 1)) == 2 * 1 + 2 * 0 + 1 * 0
        assert eval_pure(parse("Tr(x^2)-Tr(x)^2"), (0, 1)) == 1

    def test_short_vector(self):
        with pytest.raises(DimensionError):
            eval_point(parse("Tr(x^3)"), EvalPoint(0, (1, 2)))

    def test_pure_required(self):
        with pytest.raises(ValueError):
            eval_pure(parse("x"), (1,))

    def test_projection_kills_s1(self):
        s1 = parse("Tr((x-x^2)^2)")
        for r, n in [(1, 3), (2, 5), (4, 4)]:
            assert eval_pure(s1, [Fraction(r, n)] * 4) == 0

    def test_point_mass_variance(self):
        for c in (Fraction(-3), Fraction(1, 7), Fraction(5)):
            assert eval_pure(parse("Tr(x^2)-Tr(x)^2"), (c, c * c)) == 0

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(3)
        f = parse("Tr(x^3)*x^2-3*Tr(x)*x+Tr(x^2)^2-1/2")
        b0 = rng.normal(size=50)
        mom = rng.normal(size=(50, 4))
        got = eval_points(f, b0, mom)
        want = [float(eval_point(f, EvalPoint(float(a), tuple(m)))) for a, m in zip(b0, mom)]
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


class TestJson:
    def test_round_trip_exact(self):
        doc = {"n": 2, "entries": [["1/3", "2"], ["2", "-5/7"]]}
        M = load_matrix_json(json.dumps(doc))
        assert M.dtype == object
        assert dump_matrix_json(M) == doc

    def test_round_trip_float(self):
        doc = {"n": 2, "entries": [[0.5, 1.25], [1.25, -2.0]]}
        assert dump_matrix_json(load_matrix_json(json.dumps(doc))) == doc

    def test_asymmetric_rational_rejected(self):
        with pytest.raises(ValueError):
            load_matrix_json('{"n": 2, "entries": [["1", "1/3"], ["0.3333", "1"]]}')

    def test_float_symmetry_tolerance(self):
        load_matrix_json('{"n": 2, "entries": [[1.0, 0.3], [0.30000000000001, 1.0]]}')
        with pytest.raises(ValueError):
            load_matrix_json('{"n": 2, "entries": [[1.0, 0.3], [0.3001, 1.0]]}')

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            load_matrix_json('{"n": 3, "entries": [[1, 0], [0, 1]]}')


@settings(max_examples=40, deadline=None)
@given(trace_polys(max_index=3, max_terms=4, max_exp=2), st.integers(1, 5), st.integers(0, 2**31))
def test_orthogonal_equivariance(f, n, seed):
    rng = np.random.default_rng(seed)
    X = random_sym(rng, n)
    O = random_orthogonal(rng, n)
    lhs = eval_matrix(f, O @ X @ O.T)
    rhs = O @ eval_matrix(f, X) @ O.T
    deg = f.degree() if not f.is_zero() else 0
    scale = max(1.0, np.linalg.norm(X, 2)) ** deg * max(1.0, sum(abs(float(c)) for c in f.terms.values()))
    assert np.linalg.norm(lhs - rhs) < 1e-8 * scale


@settings(max_examples=20, deadline=None)
@given(trace_polys(max_index=3, max_terms=3, max_exp=2), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31))
def test_ampliation_exact(f, n, k, seed):
    rng = np.random.default_rng(seed)
    entries = [[Fraction(int(v), 3) for v in row] for row in rng.integers(-4, 5, size=(n, n))]
    entries = [[entries[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
    X = as_sym_matrix(entries)
    big = as_sym_matrix(np.kron(np.eye(k, dtype=int).astype(object), X).tolist())
    want = np.kron(np.eye(k, dtype=int).astype(object), eval_matrix(f, X))
    assert np.array_equal(eval_matrix(f, big), want)


@settings(max_examples=40, deadline=None)
@given(trace_polys(max_index=4, max_terms=4, max_exp=2), st.integers(1, 5), st.integers(0, 2**31))
def test_eigenpair_consistency(f, n, seed):
    rng = np.random.default_rng(seed)
    X = random_sym(rng, n)
    w, V = np.linalg.eigh(X)
    M = eval_matrix(f, X)
    moments = normalized_moments(X, max(f.max_index, 1))
    for i in range(n):
        v = V[:, i]
        got = float(v @ M @ v)
        want = float(eval_point(f, EvalPoint(float(w[i]), moments)))
        assert abs(got - want) < 1e-8 * max(1.0, abs(want), np.abs(M).max())


@settings(max_examples=30, deadline=None)
@given(trace_polys(max_index=4, max_terms=4, max_exp=2, pure=True), st.integers(1, 5), st.integers(0, 2**31))
def test_pure_consistency(p, n, seed):
    rng = np.random.default_rng(seed)
    X = random_sym(rng, n)
    M = eval_matrix(p, X)
    val = float(eval_pure(p, normalized_moments(X, max(p.max_index, 1))))
    assert np.allclose(M, val * np.eye(n), rtol=1e-10, atol=1e-10 * max(1.0, abs(val)))
