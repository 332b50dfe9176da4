import numpy as np
import pytest
from numpy.polynomial import Polynomial

from conftest import Q, Q_HERMITE, REPS
from oracles import gram_schmidt_recurrence, rel_coef_diff
from multiboson_qhahn.errors import MathDomainError
from multiboson_qhahn.pearson import classify, derive
from multiboson_qhahn.qhahn import (StructuralSeq, hahn_apply, hahn_eigenvalue, jackson_inner,
                                    monic_norms_from_R, monic_values, ops_by_forward,
                                    ops_by_recurrence, ops_by_rodrigues, orthonormal_gram,
                                    orthonormalize, qderiv_closure_check, structural_D,
                                    structural_D_difference, structural_functions,
                                    structural_R, structural_R_difference,
                                    subleading_by_iteration, subleading_closed_form)

NAMES = sorted(REPS)


@pytest.mark.parametrize("name", NAMES)
def test_three_routes_agree(name):
    d = REPS[name]
    r, g, f = ops_by_recurrence(d, 10), ops_by_rodrigues(d, 10), ops_by_forward(d, 10)
    for n in range(11):
        assert r[n].degree() == n
        assert r[n].coef[-1] == pytest.approx(1.0)
        assert rel_coef_diff(r[n], g[n]) <= 1e-9
        assert rel_coef_diff(r[n], f[n]) <= 1e-9


@pytest.mark.parametrize("name", NAMES)
def test_hahn_equation(name):
    d = REPS[name]
    ops = ops_by_recurrence(d, 10)
    for n in range(1, 11):
        res = hahn_apply(d, ops[n]) - hahn_eigenvalue(d, n) * ops[n]
        assert np.max(np.abs(res.coef)) <= 1e-9 * np.max(np.abs(ops[n].coef))


def test_hahn_eigenvalue_domain():
    with pytest.raises(MathDomainError):
        hahn_eigenvalue(REPS["i"], 0)


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_derivative_closure(name, k):
    d = REPS[name]
    ops = ops_by_recurrence(d, 8)
    dk = derive(d, k)
    for n in range(k + 1, 9):
        ref = ops_by_recurrence(dk, n - k)[n - k]
        assert rel_coef_diff(ref, qderiv_closure_check(d, n, k, ops)) <= 1e-9


@pytest.mark.parametrize("name", NAMES)
def test_subleading_coefficients(name):
    d = REPS[name]
    ops = ops_by_recurrence(d, 10)
    for n in range(2, 11):
        c = ops[n].coef
        for got in (subleading_by_iteration(d, n), subleading_closed_form(d, n)):
            assert got[0] == pytest.approx(c[n - 1], rel=1e-9, abs=1e-9)
            assert got[1] == pytest.approx(c[n - 2], rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("name", NAMES)
def test_factored_and_difference_forms_agree(name):
    d = REPS[name]
    for n in range(1, 12):
        x = Q ** n
        assert structural_R(d, x) == pytest.approx(structural_R_difference(d, x), rel=1e-9)
        assert structural_D(d, x) == pytest.approx(structural_D_difference(d, x), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_structural_vs_gram_schmidt(name):
    d = REPS[name]
    seq = structural_functions(d)
    R, D = gram_schmidt_recurrence(classify(d), 12)
    np.testing.assert_allclose(seq.R_array(1, 13), R, rtol=1e-12)
    np.testing.assert_allclose(seq.D_array(0, 13), D, rtol=1e-12, atol=1e-14)


def test_q_hermite_structural():
    seq = structural_functions(Q_HERMITE)
    for n in range(1, 30):
        assert seq.R(n) == pytest.approx(Q ** (n - 1) * (1 - Q ** n), rel=1e-14)
        assert seq.D(n) == 0.0
    assert seq.R(0) == 0.0


@pytest.mark.parametrize("name", NAMES)
def test_orthonormal_gram(name):
    d = REPS[name]
    G = orthonormal_gram(classify(d), structural_functions(d), 12)
    assert np.max(np.abs(G - np.eye(13))) <= 1e-8


@pytest.mark.parametrize("name", ["i", "iii", "v-1"])
def test_orthonormalize_norms_match_R(name):
    d = REPS[name]
    spec = classify(d)
    seq = structural_functions(d)
    on = orthonormalize(ops_by_recurrence(d, 8), spec)
    mu0 = jackson_inner(spec, lambda w: 1.0)
    expect = np.sqrt(monic_norms_from_R(seq, mu0, 8))
    np.testing.assert_allclose([nrm for _, nrm in on], expect, rtol=1e-9)


def test_monic_values_match_polynomials():
    d = REPS["ii"]
    ops = ops_by_recurrence(d, 6)
    seq = structural_functions(d)
    w = np.array([-0.7, 0.1, 0.9])
    vals = monic_values(seq, w, 6)
    for n in range(7):
        np.testing.assert_allclose(vals[n], ops[n](w), rtol=1e-12, atol=1e-14)


def test_explicit_sequence():
    seq = StructuralSeq.explicit(lambda n: float(n))
    assert seq.R(0) == 0.0 and seq.R(3) == 3.0 and seq.D(5) == 0.0
    assert seq.source == "explicit"
    with pytest.raises(MathDomainError):
        seq.R(-1)
    ops = ops_by_recurrence(None, 3, seq)
    # monic Hermite: He_3 = w^3 - 3w
    np.testing.assert_allclose(ops[3].coef, Polynomial([0, -3, 0, 1]).coef)


@pytest.mark.parametrize("name", NAMES)
def test_R_positive(name):
    seq = structural_functions(REPS[name])
    assert all(seq.R(n) > 0 for n in range(1, 31))
