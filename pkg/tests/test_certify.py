import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from oracles import SIGMA2_HAN2, SIGMA2_HAN2_ROOTS, DET_HAN2, DET_HAN2_ROOT, VARIANCE, trace_polys
from tracepoly.certify import (
    CertificateExpr,
    CertificateStructureError,
    Factor,
    KsCertificate,
    QuotientCertificate,
    check_ks,
    dump_certificate,
    expand,
    load_certificate,
    numeric_falsify,
    search_common_zero,
    term,
    verify_identity,
    verify_ks,
    verify_quotient,
)
from tracepoly.evaluation import eval_pure
from tracepoly.hankel import det, hankel_symbolic
from tracepoly.parser import parse
from tracepoly.ring import ONE, ZERO, TracePoly, trx

CENTRED = parse("x-Tr(x)")


def mutations(f: TracePoly, count: int):
    """Polynomials differing from ``f`` in exactly one coefficient."""
    monos = sorted(f.terms)
    for i in range(count):
        terms = dict(f.terms)
        mono = monos[i % len(monos)]
        terms[mono] = terms[mono] + Fraction(i // len(monos) + 1, 7)
        yield TracePoly(terms)


class TestExpand:
    def test_trsquare(self):
        assert expand(term(1, Factor.trsquare(CENTRED))) == parse(VARIANCE)

    def test_empty_sum(self):
        assert expand(CertificateExpr(())) == ZERO

    def test_product_and_coeff(self):
        e = term(2, Factor.square(parse("x")), Factor.trsquare(parse("x")))
        assert expand(e) == parse("2*x^2*Tr(x^2)")

    def test_sigma_factor(self):
        assert expand(term(1, Factor.sigma(3, 2))) == det(hankel_symbolic(2))

    def test_bad_terms(self):
        with pytest.raises(ValueError):
            term(0, Factor.square(ONE))
        with pytest.raises(ValueError):
            term(-1, Factor.square(ONE))
        with pytest.raises(ValueError):
            Factor.sigma(0, 1)
        with pytest.raises(ValueError):
            Factor.sigma(3, 1)
        with pytest.raises(ValueError):
            Factor.constraint(parse("x"))

    def test_json_round_trip(self):
        e = term(Fraction(3, 2), Factor.square(CENTRED), Factor.sigma(2, 1)) + term(5, Factor.constraint(trx(1)))
        doc = e.to_json()
        json.dumps(doc)
        assert CertificateExpr.from_json(doc) == e

    @settings(max_examples=40, deadline=None)
    @given(trace_polys(max_index=2, max_terms=3, max_exp=2), trace_polys(max_index=2, max_terms=3, max_exp=2))
    def test_sum_homomorphism(self, g, h):
        a = term(1, Factor.square(g))
        b = term(Fraction(1, 3), Factor.trsquare(h))
        assert expand(a + b) == expand(a) + expand(b)


class TestIdentities:
    def test_det_han2_identity(self):
        f = parse(DET_HAN2)
        lhs = parse("Tr((x-Tr(x))^2)") * f
        rhs = parse(f"Tr(({DET_HAN2_ROOT})^2)")
        assert verify_identity(lhs, rhs)

    def test_det_han2_mutations_fail(self):
        f = parse(DET_HAN2)
        rhs = parse(f"Tr(({DET_HAN2_ROOT})^2)")
        muts = list(mutations(f, 10))
        assert len({m for m in muts}) == 10
        for m in muts:
            assert not verify_identity(parse("Tr((x-Tr(x))^2)") * m, rhs)

    def test_sigma2_han2_cleared(self):
        f = parse(SIGMA2_HAN2)
        a, b, c = (parse(s) for s in SIGMA2_HAN2_ROOTS)
        lhs = trx(2) * f
        rhs = expand(term(1, Factor.trsquare(a)) + term(1, Factor.trsquare(b), Factor.trsquare(parse("x")))
                     + term(1, Factor.trsquare(c), Factor.trsquare(parse("x"))))
        assert verify_identity(lhs, rhs)
        for m in mutations(f, 6):
            assert not verify_identity(trx(2) * m, rhs)

    def test_sigma2_han2_as_quotient(self):
        a, b, c = (parse(s) for s in SIGMA2_HAN2_ROOTS)
        x = parse("x")
        r = term(1, Factor.trsquare(a)) + term(1, Factor.trsquare(x), Factor.trsquare(b)) \
            + term(1, Factor.trsquare(x), Factor.trsquare(c))
        cert = QuotientCertificate(parse(SIGMA2_HAN2), term(1, Factor.trsquare(x)), r)
        assert verify_quotient(cert)


class TestKs:
    def test_self_certificate(self):
        f = parse(VARIANCE)
        cert = KsCertificate(f, 1, term(1, Factor.sigma(2, 1)), CertificateExpr(()), (), "P")
        assert verify_ks(cert)

    def test_p2_perturbation_fails(self):
        f = parse(VARIANCE)
        cert = KsCertificate(f, 1, term(1, Factor.sigma(2, 1)), term(Fraction(1, 100), Factor.square(ONE)))
        assert verify_ks(cert) is False

    def test_constraint_certificate(self):
        # s * s = s^2 + 0 certifies s >= 0 on {s >= 0}
        s = trx(1) - 1
        cert = KsCertificate(s, 1, term(1, Factor.constraint(s)), CertificateExpr(()), (s,))
        assert verify_ks(cert)
        with pytest.raises(CertificateStructureError, match="not in S"):
            verify_ks(KsCertificate(s, 1, cert.p1, cert.p2, ()))

    def test_mode_separation(self):
        f = parse(VARIANCE)
        p1 = term(1, Factor.trsquare(CENTRED))
        # trsquare is not a generator of P
        with pytest.raises(CertificateStructureError, match="mode P"):
            verify_ks(KsCertificate(f, 0, p1, CertificateExpr(()), (), "P"))
        report = check_ks(KsCertificate(f, 0, p1, CertificateExpr(()), (), "P"))
        assert report.structural_errors and report.identity is False
        with pytest.raises(CertificateStructureError):
            verify_ks(KsCertificate(f, 1, term(1, Factor.sigma(2, 1)), CertificateExpr(()), (), "Q"))

    def test_bad_k(self):
        f = parse(VARIANCE)
        report = check_ks(KsCertificate(f, -1, term(1, Factor.sigma(2, 1)), CertificateExpr(())))
        assert report.structural_errors and not report.ok

    def test_file_round_trip(self):
        f = parse(VARIANCE)
        cert = KsCertificate(f, 1, term(1, Factor.sigma(2, 1)), CertificateExpr(()))
        again = load_certificate(json.dumps(dump_certificate(cert)))
        assert again == cert and verify_ks(again)

    def test_quotient_zero_q(self):
        with pytest.raises(CertificateStructureError, match="q expands to 0"):
            verify_quotient(QuotientCertificate(ONE, CertificateExpr(()), CertificateExpr(())))

    def test_quotient_file(self):
        doc = {"mode": "quotient", "f": VARIANCE, "q": {"terms": [{"coeff": 1, "factors": []}]},
               "r": {"terms": [{"coeff": 1, "factors": [{"kind": "trsquare", "payload": "x-Tr(x)"}]}]}}
        cert = load_certificate(json.dumps(doc))
        assert isinstance(cert, QuotientCertificate) and verify_quotient(cert)
        with pytest.raises(CertificateStructureError):
            load_certificate('{"mode": "P", "f": "x"}')


class TestFalsify:
    def test_negative_variance(self):
        ce = numeric_falsify(-parse(VARIANCE), trials=100, seed=0)
        assert ce is not None and ce.value < -1e-10 and ce.trial < 100
        assert ce.witness is not None and ce.witness_value < 0

    def test_det_han2_none(self):
        assert numeric_falsify(det(hankel_symbolic(2)), trials=10_000, seed=1, witness=False) is None

    def test_respects_constraints(self):
        # Tr(x) >= 5 bounds Tr(x) - 1 below by 4 but leaves beta0 free
        ce = numeric_falsify(parse("Tr(x)-1"), (parse("Tr(x)-5"),), trials=5000, seed=2)
        assert ce is None
        ce = numeric_falsify(parse("x-1"), (parse("Tr(x)-5"),), trials=5000, seed=2, witness=False)
        assert ce is not None and ce.moments[0] >= 5

    def test_nonpure_constraint_rejected(self):
        with pytest.raises(ValueError):
            numeric_falsify(parse("x"), (parse("x"),), trials=1)

    def test_deterministic(self):
        a = numeric_falsify(parse("x^2-Tr(x^2)"), trials=200, seed=9, witness=False)
        b = numeric_falsify(parse("x^2-Tr(x^2)"), trials=200, seed=9, witness=False)
        assert a == b and a is not None

    @pytest.mark.parametrize("seed", range(3))
    def test_certified_means_not_falsified(self, seed):
        cert = KsCertificate(parse(VARIANCE), 1, term(1, Factor.sigma(2, 1)), CertificateExpr(()))
        assert verify_ks(cert)
        assert numeric_falsify(cert.f, trials=3000, seed=seed, witness=False) is None
        det2 = parse(DET_HAN2)
        assert numeric_falsify(det2, trials=3000, seed=seed, witness=False) is None


def test_moment_only_common_zero():
    # Tr((x-x^2)^2) and sqrt(2) Tr(x) - 1 both vanish on the constant moment
    # vector 1/sqrt(2), but no matrix of small size gets both near zero.
    r = 2**-0.5
    s1 = lambda m: m[:, 1] - 2 * m[:, 2] + m[:, 3]  # noqa: E731
    s2 = lambda m: math.sqrt(2) * m[:, 0] - 1  # noqa: E731
    point = np.full((1, 4), r)
    assert abs(s1(point)[0]) < 1e-15 and abs(s2(point)[0]) < 1e-15
    assert float(eval_pure(parse("Tr((x-x^2)^2)"), [r] * 4)) == pytest.approx(0, abs=1e-15)
    assert search_common_zero([s1, s2], 60_000, seed=0) is None
    # sanity: the search does find common zeros when they exist
    t1 = lambda m: m[:, 1] - 2 * m[:, 2] + m[:, 3]  # noqa: E731
    t2 = lambda m: 2 * m[:, 0] - 1  # noqa: E731
    found = search_common_zero([t1, t2], 60_000, seed=0, tol=1e-2)
    assert found is not None
