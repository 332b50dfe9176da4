import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import Q, Q_HERMITE, REPS
from multiboson_qhahn import qcalc
from multiboson_qhahn.errors import DegenerateDataError, PoleError, UnsupportedError
from multiboson_qhahn.moments import (QHypergeometricParams, build_moment_function,
                                      hankel_det, moment_function,
                                      moment_residual, moment_solution_1, moments_by_recurrence,
                                      moments_closed_form, moments_direct, moments_direct_seq,
                                      moments_hypergeometric, mu0_closed_form,
                                      q_hypergeometric_3phi2)
from multiboson_qhahn.pearson import PearsonData, classify, from_roots, weight_function

NAMES = sorted(REPS)
ONE_ROOT = ["iv-1", "v-1", "vi-a-1"]


def abs_moment(spec, n):
    # natural scale of mu_n: the integral of |w|^n rho
    rho = weight_function(spec)
    lo, hi = spec.support
    return qcalc.jackson_integral(lambda w: abs(w) ** n * rho(w), lo, hi, spec.q)


def assert_moments_close(got, ref, spec, rel):
    for n, (a, b) in enumerate(zip(got, ref)):
        assert abs(a - b) <= rel * max(abs(b), 1e-6 * abs_moment(spec, n)), n


@pytest.mark.parametrize("name", NAMES)
def test_mu0_closed_form(name):
    d = REPS[name]
    spec = classify(d)
    assert mu0_closed_form(spec, d) == pytest.approx(moments_direct(spec, d), rel=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_recurrence_matches_direct(name):
    d = REPS[name]
    spec = classify(d)
    direct = moments_direct_seq(spec, 20)
    rec = moments_by_recurrence(d, direct[0], 20)
    assert rec.source == "recurrence" and len(rec) == 21
    assert_moments_close(rec.mu, direct.mu, spec, 1e-8)


@pytest.mark.parametrize("name", ONE_ROOT)
def test_shifted_closed_form(name):
    spec = classify(REPS[name])
    assert_moments_close(moments_closed_form(spec, 20).mu, moments_direct_seq(spec, 20).mu,
                         spec, 1e-12)


def test_negative_support_closed_form():
    d = from_roots("iv", Q, a=-1.0, c=-2.0, r=2.0)
    spec = classify(d)
    direct = moments_direct_seq(spec, 10)
    assert direct[0] > 0
    assert_moments_close(moments_closed_form(spec, 10).mu, direct.mu, spec, 1e-12)
    assert_moments_close(moments_by_recurrence(d, direct[0], 10).mu, direct.mu, spec, 1e-10)


def test_shift_rejected_for_two_root_cases():
    with pytest.raises(UnsupportedError):
        mu0_closed_form(classify(REPS["ii"]), shift=1)


@pytest.mark.parametrize("data", [REPS["iii"], Q_HERMITE], ids=["iii", "q-hermite"])
def test_odd_moments_vanish(data):
    spec = classify(data)
    direct = moments_direct_seq(spec, 21)
    rec = moments_by_recurrence(data, direct[0], 21)
    for n in range(1, 22, 2):
        assert rec[n] == 0.0
        assert abs(direct[n]) <= 1e-15 * direct[0]


@pytest.mark.parametrize("name", NAMES)
def test_hankel_positive(name):
    spec = classify(REPS[name])
    mu = moments_direct_seq(spec, 10).normalized()
    for m in range(5):
        assert hankel_det(mu, m) > 0


def test_recurrence_needs_a1():
    with pytest.raises(DegenerateDataError):
        moments_by_recurrence(PearsonData(0.0, 1.0, 1.0, 0.0, -1.0, Q), 1.0, 3)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10))
def test_moments_linear_in_mu0(c):
    d = REPS["i"]
    a = moments_by_recurrence(d, 1.0, 10).mu
    b = moments_by_recurrence(d, c, 10).mu
    np.testing.assert_allclose(np.array(b), c * np.array(a), rtol=1e-12, atol=1e-300)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3).filter(lambda s: abs(s) > 0.1))
def test_moments_invariant_under_scaling(c):
    d = REPS["ii"]
    np.testing.assert_allclose(moments_by_recurrence(d.scaled(c), 1.0, 10).mu,
                               moments_by_recurrence(d, 1.0, 10).mu, rtol=1e-10, atol=1e-14)


def test_3phi2_trivial_cases():
    q = 0.5
    # a zero numerator parameter 1 terminates at k = 0
    assert q_hypergeometric_3phi2(QHypergeometricParams((1.0, 0.3, 0.2), (0.1, 0.4), q, 0.7)) == 1.0
    # z = 0
    assert q_hypergeometric_3phi2(QHypergeometricParams((0.3, 0.2, 0.1), (0.1, 0.4), q, 0.0)) == 1.0
    # (a, b, c; b, c, q)_k z^k / (q;q)_k sums to (a z; q)_inf / (z; q)_inf
    p = QHypergeometricParams((0.3, 0.2, 0.6), (0.2, 0.6), q, 0.4)
    ref = qcalc.q_pochhammer(0.3 * 0.4, q) / qcalc.q_pochhammer(0.4, q)
    assert q_hypergeometric_3phi2(p) == pytest.approx(ref, rel=1e-14)


def test_3phi2_pole():
    with pytest.raises(PoleError):
        q_hypergeometric_3phi2(QHypergeometricParams((0.3, 0.2, 0.1), (4.0, 0.4), 0.5, 0.3))


@pytest.mark.parametrize("name", ["i", "i-alpha", "ii", "iii"])
def test_moment_function_route(name):
    d = REPS[name]
    spec = classify(d)
    direct = moments_direct_seq(spec, 20)
    hyp = moments_hypergeometric(d, direct[0], 20)
    assert_moments_close(hyp.mu, direct.mu, spec, 1e-9)
    assert moment_function(d, 5, direct[0]) == pytest.approx(direct[5], rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("name", ["i", "ii", "iii"])
def test_moment_function_solutions(name):
    d = REPS[name]
    f = build_moment_function(d, 1.0)
    # mu2 is generated from the closed-form Casoratian, so its residual
    # checks that closed form against the second-order moment equation
    for m in range(1, 15):
        w = Q ** m
        scale = abs(f.mu1(m)) + abs(f.mu1(m + 2)) + 1
        assert abs(moment_residual(d, lambda x: moment_solution_1(d, x), w)) <= 1e-12 * scale
        mu2 = lambda x: f.mu2(round(np.log(x) / np.log(Q)))
        r2 = moment_residual(d, mu2, w)
        assert abs(r2) <= 1e-9 * max(abs(f.mu2(j)) for j in range(m, m + 3))


def test_moment_function_falls_back_when_B1_nonzero():
    d = from_roots("ii", Q, a=-1.0, b=2.0, c=3.0)
    spec = classify(d)
    mu0 = moments_direct(spec, d)
    with pytest.raises(UnsupportedError):
        build_moment_function(d, mu0)
    assert moment_function(d, 4, mu0) == pytest.approx(moments_direct(spec, d, 4), rel=1e-10)
