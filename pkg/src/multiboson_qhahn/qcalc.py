"""Primitives of q- and (q,h)-difference calculus.

Polynomials are ``numpy.polynomial.Polynomial`` objects in the monomial
basis (lowest degree first).  All operators acting on polynomials work on
the coefficient vector directly, so results are exact up to floating point
rounding of the coefficients themselves.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import FixedPointError, MathDomainError, NonConvergenceError

MAX_ITER = 10000
EPS = np.finfo(float).eps


def check_q(q: float) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise MathDomainError(f"q must satisfy 0 < q < 1, got {q!r}")
    return q


def q_bracket(n, q: float) -> float:
    """q-number [n] = (1 - q^n) / (1 - q).  Negative n is allowed."""
    if n == 0:
        return 0.0
    return (1.0 - q ** n) / (1.0 - q)


def q_pochhammer(x, q: float, k=None, tol: float = 1e-17, max_iter: int = MAX_ITER):
    """q-shifted factorial (x; q)_k.

    Parameters
    ----------
    x : float or complex
    q : float
    k : int, None or math.inf
        Number of factors. ``None`` or ``inf`` gives the infinite product.
    tol : float
        Infinite products stop once ``|q^j x| < tol``.  The neglected tail
        then changes the value by a relative amount below ``tol / (1 - q)``.

    Returns
    -------
    float or complex
    """
    if k is not None and k != math.inf:
        k = int(k)
        if k < 0:
            raise MathDomainError("negative Pochhammer length")
        p = 1.0
        t = x
        for _ in range(k):
            p *= 1.0 - t
            t *= q
        return p
    if tol <= 0:
        raise MathDomainError("tol must be positive")
    p = 1.0
    t = x
    for _ in range(max_iter):
        if abs(t) < tol:
            return p
        p *= 1.0 - t
        t *= q
    raise NonConvergenceError(f"(x;q)_inf did not converge for x={x!r}")


def log_q_pochhammer(x, q: float, k=None, tol: float = 1e-17, max_iter: int = MAX_ITER):
    """Return ``(log|(x;q)_k|, phase)``.

    ``phase`` is +-1 for real ``x`` and a unit complex number otherwise; it is 0
    when one of the factors vanishes (then the log is ``-inf``).  Used for
    weights whose Pochhammer factors over- or underflow on the Jackson grid.
    """
    is_complex = isinstance(x, complex)
    logabs = 0.0
    phase = 1.0 + 0j if is_complex else 1.0
    t = x
    n = max_iter if (k is None or k == math.inf) else int(k)
    for _ in range(n):
        if (k is None or k == math.inf) and abs(t) < tol:
            break
        f = 1.0 - t
        if f == 0:
            return -math.inf, 0.0
        a = abs(f)
        logabs += math.log(a)
        phase = phase * (f / a) if is_complex else (phase if f > 0 else -phase)
        t *= q
    else:
        if k is None or k == math.inf:
            raise NonConvergenceError(f"(x;q)_inf did not converge for x={x!r}")
    return logabs, phase


def q_pochhammer_general(x, q: float, s: float, tol: float = 1e-17):
    """(x;q)_s for real, possibly non-integer s via (x;q)_inf / (x q^s; q)_inf."""
    if float(s).is_integer() and s >= 0:
        return q_pochhammer(x, q, int(s))
    return q_pochhammer(x, q, tol=tol) / q_pochhammer(x * q ** s, q, tol=tol)


def q_derivative_poly(p: Polynomial, q: float) -> Polynomial:
    """Exact q-derivative: c_k w^k -> [k] c_k w^(k-1)."""
    c = np.asarray(p.coef, dtype=float)
    if c.size <= 1:
        return Polynomial([0.0])
    k = np.arange(1, c.size)
    return Polynomial((1.0 - q ** k) / (1.0 - q) * c[1:])


def scale_poly(p: Polynomial, c: float) -> Polynomial:
    """p(w) -> p(c w); with c=q this is the operator Q, with c=1/q its inverse."""
    coef = np.asarray(p.coef)
    return Polynomial(coef * float(c) ** np.arange(coef.size))


def trim(p: Polynomial, rtol: float = 0.0) -> Polynomial:
    c = np.asarray(p.coef, dtype=float)
    if c.size == 0:
        return Polynomial([0.0])
    thr = rtol * np.max(np.abs(c))
    nz = np.nonzero(np.abs(c) > thr)[0]
    if nz.size == 0:
        return Polynomial([0.0])
    return Polynomial(c[: nz[-1] + 1])


def qh_derivative(f: Callable, x: float, q: float, h: float = 0.0) -> float:
    """(f(x) - f(qx+h)) / (x - (qx+h))."""
    y = q * x + h
    den = x - y
    if den == 0:
        raise FixedPointError(f"x={x!r} is the fixed point of x -> qx+h")
    return (f(x) - f(y)) / den


def qh_derivative_poly(p: Polynomial, q: float, h: float = 0.0) -> Polynomial:
    """(q,h)-derivative of a polynomial as a polynomial.

    Conjugates the q-derivative by the translation to the fixed point
    h/(1-q), so the result is also defined at the fixed point itself.
    """
    x0 = h / (1.0 - q)
    shift = Polynomial([x0, 1.0])
    back = Polynomial([-x0, 1.0])
    return q_derivative_poly(p(shift), q)(back)


def affine_action(f: Callable, c: float, t: float) -> Callable:
    """The representation x -> f(c x + t) of the affine group."""
    return lambda x: f(c * x + t)


def affine_action_inverse(f: Callable, c: float, t: float) -> Callable:
    return lambda x: f((x - t) / c)


MIN_DEPTH = 1e-8


def _geometric_series(term: Callable[[int], float], q: float, tol: float,
                      max_iter: int, window: int = 4):
    # Sum term(0) + term(1) + ... .  The tail after step k is bounded by
    # m * r / (1 - r), with m the largest of the last few |terms| and r the
    # larger of q and the observed decay ratio in the same window.  The bound
    # is only trusted once q^k < MIN_DEPTH: integrands with zeros on the grid
    # (orthogonal polynomials) can dip and recover at moderate depth.
    min_iter = max(window + 1, int(math.ceil(math.log(MIN_DEPTH) / math.log(q))))
    s = 0.0
    sabs = 0.0
    recent = []
    for k in range(max_iter):
        t = term(k)
        s += t
        sabs += abs(t)
        recent.append(abs(t))
        if len(recent) > window + 1:
            recent.pop(0)
        if k + 1 < min_iter:
            continue
        m = max(recent)
        ratios = [b / a for a, b in zip(recent[:-1], recent[1:]) if a > 0]
        r = max([q] + ratios)
        if r >= 1.0:
            continue
        if m * r / (1.0 - r) <= tol * sabs:
            return s
    raise NonConvergenceError(f"q-series did not converge within {max_iter} terms")


def jackson_integral(f: Callable, a: float, b: float, q: float,
                     tol: float = 1e-16, max_iter: int = MAX_ITER) -> float:
    """Jackson integral of f over [a, b].

    Sum of ``(1-q) q^k [b f(q^k b) - a f(q^k a)]``; a zero endpoint
    contributes nothing and f is never evaluated there.

    Parameters
    ----------
    tol : float
        Relative tolerance on the estimated tail, measured against the sum of
        absolute values of the terms.
    """
    q = check_q(q)
    if tol <= 0:
        raise MathDomainError("tol must be positive")

    def term(k):
        qk = q ** k
        t = 0.0
        if b != 0:
            t += b * f(qk * b)
        if a != 0:
            t -= a * f(qk * a)
        return (1.0 - q) * qk * t

    return _geometric_series(term, q, tol, max_iter)


def qh_integral(f: Callable, x: float, q: float, h: float = 0.0,
                tol: float = 1e-16, max_iter: int = MAX_ITER) -> float:
    """(q,h)-integral from the fixed point h/(1-q) to x."""
    q = check_q(q)
    if tol <= 0:
        raise MathDomainError("tol must be positive")
    xinf = h / (1.0 - q)
    step = x - (q * x + h)
    if step == 0:
        return 0.0

    def term(k):
        qk = q ** k
        node = xinf + qk * (x - xinf)
        if node == xinf:
            # the grid has rounded onto the fixed point; the weight step*q^k
            # is below rounding relative to the partial sum by now
            return 0.0
        return step * qk * f(node)

    return _geometric_series(term, q, tol, max_iter)


def fixed_point(q: float, h: float) -> float:
    return h / (1.0 - q)
