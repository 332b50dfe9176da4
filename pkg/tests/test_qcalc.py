import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial

from multiboson_qhahn import qcalc
from multiboson_qhahn.errors import FixedPointError, MathDomainError

qs = st.floats(0.05, 0.95)
coefs = st.lists(st.floats(-3, 3), min_size=1, max_size=7)
points = st.floats(-2, 2)


def test_q_bracket():
    assert qcalc.q_bracket(0, 0.5) == 0.0
    assert qcalc.q_bracket(1, 0.5) == 1.0
    assert qcalc.q_bracket(3, 0.5) == pytest.approx(1.75)
    assert qcalc.q_bracket(-1, 0.5) == pytest.approx(-2.0)


def test_check_q():
    with pytest.raises(MathDomainError):
        qcalc.check_q(1.2)
    with pytest.raises(MathDomainError):
        qcalc.check_q(0.0)


def test_pochhammer_finite_and_infinite():
    q = 0.5
    assert qcalc.q_pochhammer(0.3, q, 0) == 1.0
    assert qcalc.q_pochhammer(0.3, q, 2) == pytest.approx(0.7 * 0.85)
    # Euler: (q;q)_inf from the pentagonal series
    pent = sum((-1) ** k * q ** (k * (3 * k - 1) / 2) for k in range(-30, 31))
    assert qcalc.q_pochhammer(q, q) == pytest.approx(pent, rel=1e-14)


def test_pochhammer_complex_pair_is_real():
    z = 0.3 + 0.4j
    p = qcalc.q_pochhammer(z, 0.5) * qcalc.q_pochhammer(z.conjugate(), 0.5)
    assert abs(p.imag) < 1e-15


def test_log_pochhammer_matches():
    l, s = qcalc.log_q_pochhammer(-3.0, 0.5)
    assert s * math.exp(l) == pytest.approx(qcalc.q_pochhammer(-3.0, 0.5), rel=1e-13)
    assert qcalc.log_q_pochhammer(4.0, 0.5)[1] == 0.0  # factor 1 - q^2 * 4 = 0


def test_pochhammer_general():
    q = 0.5
    assert qcalc.q_pochhammer_general(q, q, 3) == pytest.approx(qcalc.q_pochhammer(q, q, 3))
    v = qcalc.q_pochhammer_general(q, q, 0.5)
    assert v == pytest.approx(qcalc.q_pochhammer(q, q) / qcalc.q_pochhammer(q ** 1.5, q))


def test_q_derivative_monomials():
    q = 0.5
    d = qcalc.q_derivative_poly(Polynomial([0, 0, 0, 1.0]), q)
    np.testing.assert_allclose(d.coef, [0, 0, qcalc.q_bracket(3, q)])


def test_qh_derivative_fixed_point():
    with pytest.raises(FixedPointError):
        qcalc.qh_derivative(lambda x: x, 2.0, 0.5, 1.0)


def test_jackson_integral_powers():
    q = 0.5
    for n in range(6):
        v = qcalc.jackson_integral(lambda x: x ** n, 0.0, 1.0, q)
        assert v == pytest.approx(1.0 / qcalc.q_bracket(n + 1, q), rel=1e-14)


def test_jackson_integral_dipping_integrand():
    # integrand with a zero on the grid must not stop the sum early
    q = 0.5
    f = lambda x: (x - 0.25) ** 2
    exact = 1 / qcalc.q_bracket(3, q) - 0.5 / qcalc.q_bracket(2, q) + 0.0625
    assert qcalc.jackson_integral(f, 0.0, 1.0, q) == pytest.approx(exact, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(coefs, coefs, qs, st.floats(-1, 1), points)
def test_leibniz_rule(c1, c2, q, h, x):
    f, g = Polynomial(c1), Polynomial(c2)
    if abs(x - (q * x + h)) < 1e-3:
        return
    lhs = qcalc.qh_derivative(lambda y: f(y) * g(y), x, q, h)
    rhs = (qcalc.qh_derivative(f, x, q, h) * g(x)
           + f(q * x + h) * qcalc.qh_derivative(g, x, q, h))
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(coefs, qs, st.floats(-1, 1), st.floats(0.2, 3), st.floats(-1, 1), points)
def test_equivariance(c, q, h, cc, t, x):
    f = Polynomial(c)
    h2 = cc * h + (1 - q) * t
    if abs(x - (q * x + h2)) < 1e-3:
        return
    g = qcalc.affine_action(f, cc, t)
    y = (x - t) / cc
    lhs = qcalc.qh_derivative(g, y, q, h)
    rhs = cc * qcalc.qh_derivative(f, x, q, h2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(coefs, qs, st.floats(-1, 1), points)
def test_integral_right_inverse(c, q, h, x):
    f = Polynomial(c)
    if abs(x - (q * x + h)) < 1e-3:
        return
    F = lambda y: qcalc.qh_integral(f, y, q, h)
    assert qcalc.qh_derivative(F, x, q, h) == pytest.approx(f(x), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(coefs, qs, st.floats(-1, 1), points)
def test_integral_of_derivative(c, q, h, x):
    f = Polynomial(c)
    xinf = qcalc.fixed_point(q, h)
    v = qcalc.qh_integral(qcalc.qh_derivative_poly(f, q, h), x, q, h)
    assert v == pytest.approx(f(x) - f(xinf), rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(coefs, qs)
def test_q_derivative_poly_matches_pointwise(c, q):
    p = Polynomial(c)
    d = qcalc.q_derivative_poly(p, q)
    for x in (0.3, -0.7, 1.3):
        assert d(x) == pytest.approx(qcalc.qh_derivative(p, x, q), rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(coefs, qs, st.floats(-1, 1), points)
def test_qh_derivative_poly_matches_pointwise(c, q, h, x):
    p = Polynomial(c)
    if abs(x - (q * x + h)) < 1e-3:
        return
    d = qcalc.qh_derivative_poly(p, q, h)
    assert d(x) == pytest.approx(qcalc.qh_derivative(p, x, q, h), rel=1e-8, abs=1e-8)


def test_scale_poly():
    p = Polynomial([1.0, 2.0, 3.0])
    assert qcalc.scale_poly(p, 0.5)(2.0) == pytest.approx(p(1.0))
