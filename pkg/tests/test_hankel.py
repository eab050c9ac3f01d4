import itertools

import numpy as np
import pytest

from oracles import SIGMA2_HAN2, DET_HAN2, VARIANCE, char_coeffs, measure_moments, random_measure
from tracepoly.evaluation import eval_pure
from tracepoly.hankel import (
    PolyMatrix,
    det,
    eigenvalues,
    hankel_localized,
    hankel_numeric,
    hankel_symbolic,
    is_psd,
    sigma,
)
from tracepoly.parser import parse
from tracepoly.ring import ONE, X, ZERO, trx


def test_symbolic_small():
    assert hankel_symbolic(0).rows() == ((ONE,),)
    assert hankel_symbolic(1).to_strings() == [["1", "Tr(x)"], ["Tr(x)", "Tr(x^2)"]]
    H2 = hankel_symbolic(2)
    assert H2[2, 2] == trx(4) and H2[0, 2] == trx(2) and H2.is_symmetric()


def test_localized():
    L = hankel_localized(1, X**3)
    assert L.to_strings() == [["Tr(x^3)", "Tr(x^4)"], ["Tr(x^4)", "Tr(x^5)"]]
    assert hankel_localized(0, X).to_strings() == [["Tr(x)"]]
    assert hankel_localized(1, ONE) == hankel_symbolic(1)


def test_det_ground_truth():
    assert det(hankel_symbolic(2)) == parse(DET_HAN2)
    assert det(hankel_symbolic(1)) == parse(VARIANCE)
    assert det(PolyMatrix([[ONE]])) == ONE


def test_sigma_ground_truth():
    assert sigma(2, hankel_symbolic(1)) == parse(VARIANCE)
    s22 = sigma(2, hankel_symbolic(2))
    assert s22 == parse(SIGMA2_HAN2)
    assert s22.degree() == 6
    for d in range(4):
        assert sigma(1, hankel_symbolic(d)) == sum((trx(2 * k) for k in range(d + 1)), ZERO)


def test_sigma_range():
    with pytest.raises(ValueError):
        sigma(0, hankel_symbolic(1))
    with pytest.raises(ValueError):
        sigma(3, hankel_symbolic(1))


@pytest.mark.parametrize("d", [0, 1, 2, 3])
def test_det_is_top_sigma(d):
    H = hankel_symbolic(d)
    assert det(H) == sigma(d + 1, H)


def test_sigma_matches_characteristic_polynomial():
    rng = np.random.default_rng(7)
    for d in (1, 2, 3):
        H = hankel_symbolic(d)
        sig = [sigma(j, H) for j in range(1, d + 2)]
        for _ in range(50):
            gamma = rng.normal(size=2 * d)
            A = hankel_numeric(gamma)
            want = char_coeffs(A)
            got = [float(eval_pure(s, gamma)) for s in sig]
            assert np.allclose(got, want, rtol=1e-8, atol=1e-8 * max(1, np.abs(A).max() ** (d + 1)))


def test_numeric():
    assert hankel_numeric((0, 1, 0, 1)).tolist() == [[1, 0, 1], [0, 1, 0], [1, 0, 1]]
    assert hankel_numeric((0, 0)).tolist() == [[1, 0], [0, 0]]
    c = 1.7
    H = hankel_numeric([c**j for j in range(1, 7)])
    v = np.array([c**i for i in range(4)])
    assert np.allclose(H, np.outer(v, v))
    with pytest.raises(ValueError):
        hankel_numeric((1, 2, 3))


def test_is_psd():
    assert is_psd(np.array([[1.0, 0], [0, 0]]))
    assert not is_psd(np.array([[0.0, 1], [1, 0]]))
    with pytest.raises(ValueError):
        is_psd(np.array([[np.nan, 0], [0, 1]]))
    rng = np.random.default_rng(0)
    for k in range(1, 6):
        atoms, w = random_measure(rng, k)
        assert is_psd(hankel_numeric(measure_moments(atoms, w, 8)))


def test_psd_iff_sigmas_nonnegative():
    rng = np.random.default_rng(11)
    agree = 0
    for trial in range(300):
        B = rng.normal(size=(4, 4))
        if trial % 2:
            A = B @ B.T - rng.uniform(0, 0.3) * np.eye(4)
        else:
            A = B @ np.diag([1, 1, 1, 0]) @ B.T
        w = np.linalg.eigvalsh(A)
        if abs(w[0]) < 1e-6 * max(1, abs(w).max()) and trial % 2:
            continue  # too close to the boundary to call
        sig = char_coeffs(A)
        scale = max(1.0, np.abs(w).max())
        by_sigma = all(s >= -1e-10 * scale ** (j + 1) for j, s in enumerate(sig))
        assert by_sigma == is_psd(A, tol=1e-10)
        agree += 1
    assert agree > 200


def test_eigenvalues_sorted():
    A = np.array([[2.0, 1, 0], [1, 2, 1], [0, 1, 2]])
    assert np.allclose(eigenvalues(A), np.linalg.eigvalsh(A))


def test_entrywise_trace_of_rank_one():
    # B = entrywise trace of w w^T with w = (1, x, ..., x^d) is Han_d, and
    # tr(C1 B C2) = sum_k Tr((C1 A C2)_kk) for C1, C2 over the pure ring.
    d = 2
    w = [X**i for i in range(d + 1)]
    A = [[w[i] * w[j] for j in range(d + 1)] for i in range(d + 1)]
    B = [[A[i][j].trace() for j in range(d + 1)] for i in range(d + 1)]
    assert PolyMatrix(B) == hankel_symbolic(d)
    rng = np.random.default_rng(5)
    pool = [ONE, trx(1), trx(2) - 1, 2 * trx(1) * trx(3), ZERO]

    def rand_mat():
        return [[pool[int(rng.integers(len(pool)))] for _ in range(d + 1)] for _ in range(d + 1)]

    def matmul(P, Q):
        n = len(P)
        return [[sum((P[i][k] * Q[k][j] for k in range(n)), ZERO) for j in range(n)] for i in range(n)]

    for _ in range(5):
        C1, C2 = rand_mat(), rand_mat()
        lhs = sum((matmul(matmul(C1, B), C2)[k][k] for k in range(d + 1)), ZERO)
        rhs = sum((matmul(matmul(C1, A), C2)[k][k].trace() for k in range(d + 1)), ZERO)
        assert lhs == rhs


def test_size_cap():
    big = PolyMatrix([[ONE if i == j else ZERO for j in range(13)] for i in range(13)])
    with pytest.raises(ValueError):
        det(big)


def test_principal_minor_brute_force():
    d = 2
    H = hankel_symbolic(d)
    gamma = (0.3, 1.1, -0.2, 2.5)
    A = hankel_numeric(gamma)
    for j in range(1, 4):
        brute = sum(np.linalg.det(A[np.ix_(idx, idx)]) for idx in itertools.combinations(range(3), j))
        assert abs(float(eval_pure(sigma(j, H), gamma)) - brute) < 1e-10
