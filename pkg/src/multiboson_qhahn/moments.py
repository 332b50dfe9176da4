"""Moments of the Pearson measure.

Three independent routes: the three-term moment recurrence, closed-form
mu_0 values (shifted-exponent rule for the one-root cases), and direct
Jackson integration.  For data with B(1) = 0 the moments are also values
of a moment function mu(w) on the grid w = q^(n+1), built from a basic
hypergeometric solution and a second solution fixed by its Casoratian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import qcalc
from .errors import (DegenerateDataError, MathDomainError, NonConvergenceError,
                     PoleError, UnsupportedError)
from .pearson import PearsonData, WeightSpec, quadratic_roots, weight_function


@dataclass(frozen=True)
class MomentSeq:
    mu: tuple
    source: str

    def __len__(self):
        return len(self.mu)

    def __getitem__(self, n):
        return self.mu[n]

    def normalized(self):
        return np.asarray(self.mu) / self.mu[0]

    def as_dict(self):
        return {"mu": list(self.mu), "source": self.source}


@dataclass(frozen=True)
class QHypergeometricParams:
    numerator: tuple
    denominator: tuple
    q: float
    z: complex = 0.0


def hankel_det(mu: Sequence[float], m: int) -> float:
    """det[mu_{i+j}] for i, j = 0..m."""
    H = np.array([[mu[i + j] for j in range(m + 1)] for i in range(m + 1)], dtype=float)
    return float(np.linalg.det(H))


# ---------------------------------------------------------------- recurrence

def moments_by_recurrence(data: PearsonData, mu0: float, N: int) -> MomentSeq:
    """mu_0..mu_N from a1 mu_1 + a0 mu_0 = 0 and

        -[n](b2 mu_{n+1} + b1 mu_n + b0 mu_{n-1}) = q^n (a1 mu_{n+1} + a0 mu_n).
    """
    q = data.q
    a1, a0, b2, b1, b0 = data.coeffs
    if a1 == 0:
        raise DegenerateDataError("a1 = 0: the first-moment relation only forces a0*mu0 = 0")
    mu = [float(mu0)]
    if N >= 1:
        mu.append(-a0 * mu0 / a1)
    for n in range(1, N):
        bn = qcalc.q_bracket(n, q)
        qn = q ** n
        c = -bn * b2 - qn * a1
        if c == 0:
            raise DegenerateDataError(f"moment recurrence is singular at n={n}")
        mu.append((bn * (b1 * mu[n] + b0 * mu[n - 1]) + qn * a0 * mu[n]) / c)
    return MomentSeq(tuple(mu[: N + 1]), "recurrence")


# ---------------------------------------------------------------- closed form

def _poch_ratio(x, q, s):
    # (x; q)_s for real s >= 0 through (x;q)_inf / (x q^s; q)_inf
    return qcalc.q_pochhammer_general(x, q, s)


def mu0_closed_form(spec: WeightSpec, data: Optional[PearsonData] = None,
                    shift: float = 0.0) -> float:
    """Closed-form Jackson integral of the case weight over its support.

    For the one-root cases (iv, v, vi) ``shift`` replaces r by r + shift,
    which gives the moment mu_shift.  A support [a, 0] with a < 0 is
    traversed from a to 0, which flips the sign of the [0, a] formula.
    """
    q = spec.q
    P = lambda x: qcalc.q_pochhammer(x, q)
    if spec.case in ("i", "ii", "iii"):
        if shift:
            raise UnsupportedError("shifted closed forms exist only for cases iv-vi")
        a, b = spec.roots_B
        val = (1 - q) * (b - a) * P(q) * P(q * b / a) * P(q * a / b)
        if spec.case == "i":
            c, d = spec.roots_shift
            num = P(a * b / (c * d))
            den = P(a / c) * P(a / d) * P(b / c) * P(b / d)
            val = val * num / den
        elif spec.case == "ii":
            (c,) = spec.roots_shift
            val = val / (P(a / c) * P(b / c))
        return float(np.real(val))
    if spec.case in ("iv", "v", "vi-a", "vi-b"):
        (a,) = spec.roots_B
        r = (spec.r or 0.0) + shift
        if a < 0 and not float(r).is_integer():
            raise MathDomainError("negative support needs an integer exponent")
        lead = (1 - q) * (a ** (r + 1) if a > 0 else (-1) ** int(round(r + 1)) * abs(a) ** (r + 1))
        if spec.case == "v":
            val = lead * _poch_ratio(q, q, r)
        elif spec.case == "iv":
            (c,) = spec.roots_shift
            val = lead * _poch_ratio(q, q, r) / _poch_ratio(a / c, q, r + 1)
        elif spec.case == "vi-a":
            val = lead * P(q) * P(-a * q ** (r + 1)) / (P(-a) * P(-q / a))
        else:
            val = lead * P(q) * P(a * q ** (r + 1)) / (P(a) * P(q / a))
        lo, hi = spec.support
        return float(-val if hi == 0 else val)
    raise UnsupportedError(f"no closed form for case {spec.case!r}")


def moments_closed_form(spec: WeightSpec, N: int) -> MomentSeq:
    """mu_0..mu_N by the shifted-exponent rule (cases iv-vi)."""
    return MomentSeq(tuple(mu0_closed_form(spec, shift=n) for n in range(N + 1)), "closed")


# ---------------------------------------------------------------- direct

def moments_direct(spec: WeightSpec, data: Optional[PearsonData] = None, n: int = 0,
                   tol: float = 1e-16, rho=None) -> float:
    """Jackson integral of w^n rho(w) over the support."""
    if not spec.positive:
        raise MathDomainError("moments need an accepted positive weight")
    rho = rho or weight_function(spec)
    lo, hi = spec.support
    return qcalc.jackson_integral(lambda w: w ** n * rho(w), lo, hi, spec.q, tol=tol)


def moments_direct_seq(spec: WeightSpec, N: int, tol: float = 1e-16) -> MomentSeq:
    rho = weight_function(spec)
    return MomentSeq(tuple(moments_direct(spec, None, n, tol, rho) for n in range(N + 1)),
                     "direct")


# ---------------------------------------------------------------- 3phi2

def q_hypergeometric_3phi2(params: QHypergeometricParams, tol: float = 1e-16,
                           max_iter: int = qcalc.MAX_ITER):
    """Sum_k (a1, a2, a3; q)_k / (b1, b2, q; q)_k z^k.

    Unit unbalanced factor.  Parameters may be complex; a real result is
    returned when the imaginary part is at rounding level.
    """
    if tol <= 0:
        raise MathDomainError("tol must be positive")
    (x1, x2, x3), (y1, y2) = params.numerator, params.denominator
    q, z = params.q, params.z
    s = 1.0 + 0j
    sabs = 1.0
    t = 1.0 + 0j
    grow = 0
    for k in range(max_iter):
        qk = q ** k
        den = (1 - y1 * qk) * (1 - y2 * qk) * (1 - q * qk)
        num = (1 - x1 * qk) * (1 - x2 * qk) * (1 - x3 * qk)
        if num == 0:
            break
        if den == 0:
            raise PoleError(f"3phi2 denominator vanishes at k={k}")
        t_new = t * num / den * z
        grow = grow + 1 if abs(t_new) > abs(t) else 0
        if grow > 50:
            raise NonConvergenceError("3phi2 terms keep growing")
        t = t_new
        s += t
        sabs += abs(t)
        # ratio tends to z; bound the tail geometrically
        r = max(abs(z), abs(num / den * z))
        if r < 1 and abs(t) * r / (1 - r) <= tol * sabs:
            break
    else:
        raise NonConvergenceError("3phi2 did not converge")
    if abs(s.imag) <= 1e-12 * max(abs(s.real), 1e-300):
        return float(s.real)
    return complex(s)


# ---------------------------------------------------------------- moment function

def _shift_roots(data: PearsonData):
    # reciprocals 1/c, 1/d of the roots of S(w) = b0 + s1 w + s2 w^2, i.e. the
    # roots of b0 u^2 + s1 u + s2 (0 for an absent root)
    b0, s1, s2 = data.b0, data.s1, data.s2
    if s2 == 0:
        return [-s1 / b0, 0.0]
    return list(quadratic_roots(b0, s1, s2))


def moment_params(data: PearsonData, w) -> QHypergeometricParams:
    """Parameters of the first moment-function solution at w.

    Numerators (1/c, 1/d, q) with c, d the roots of S; denominators
    (q / a', q) with a' = b0 / b2 the root of B other than 1.
    """
    if data.b0 == 0:
        raise UnsupportedError("moment function needs b0 != 0")
    u1, u2 = _shift_roots(data)
    return QHypergeometricParams((u1, u2, data.q), (data.q * data.b2 / data.b0, data.q), data.q, w)


def moment_solution_1(data: PearsonData, w, tol: float = 1e-16):
    return q_hypergeometric_3phi2(moment_params(data, w), tol)


def casoratian_closed_form(data: PearsonData, n: int) -> float:
    """Casoratian mu2(w) mu1(q w) - mu2(q w) mu1(w) at w = q^n, n >= 1.

    Equal to (b0/b2)^n (beta q^n; q)_inf / (q^n; q)_inf with beta = s2/b2,
    up to the normalization fixed by mu2(q) = 0.  Real for either sign of
    b2/b0.
    """
    if data.b2 == 0 or data.b0 == 0:
        raise UnsupportedError("Casoratian needs b0 != 0 and b2 != 0")
    if n < 1:
        raise MathDomainError("Casoratian is defined on q^n with n >= 1")
    q = data.q
    beta = data.s2 / data.b2
    return (data.b0 / data.b2) ** n * qcalc.q_pochhammer(beta * q ** n, q) / qcalc.q_pochhammer(q ** n, q)


def moment_residual(data: PearsonData, mu, w) -> float:
    """(1 - w) B(Q) mu(w) + (1 - q) w Q A(Q) mu(w) for a callable mu."""
    q = data.q
    a1, a0, b2, b1, b0 = data.coeffs
    m0, m1, m2 = mu(w), mu(q * w), mu(q * q * w)
    return (1 - w) * (b2 * m2 + b1 * m1 + b0 * m0) + (1 - q) * w * (a1 * m2 + a0 * m1)


def _b_at_one(data: PearsonData) -> float:
    return data.b2 + data.b1 + data.b0


@dataclass
class MomentFunction:
    """mu(q^m) = c1 mu1(q^m) + c2 mu2(q^m) on the grid m >= 1."""
    data: PearsonData
    mu0: float
    c1: float = 0.0
    c2: float = 0.0
    mu2_grid: List[float] = field(default_factory=list)

    def mu1(self, m: int):
        return moment_solution_1(self.data, self.data.q ** m)

    def mu2(self, m: int):
        self._extend(m)
        return self.mu2_grid[m]

    def _extend(self, m):
        # mu2(q) = 0; the Casoratian relation then fixes mu2(q^(n+1))
        g = self.mu2_grid
        if not g:
            g.extend([math.nan, 0.0])
        while len(g) <= m:
            n = len(g) - 1
            den = self.mu1(n)
            if den == 0:
                raise PoleError(f"mu1 vanishes at q^{n}")
            g.append((g[n] * self.mu1(n + 1) - casoratian_closed_form(self.data, n)) / den)

    def __call__(self, m: int) -> float:
        return self.c1 * self.mu1(m) + self.c2 * self.mu2(m)

    def moment(self, n: int) -> float:
        return self(n + 1)


def build_moment_function(data: PearsonData, mu0: float) -> MomentFunction:
    if abs(_b_at_one(data)) > 1e-12 * data.scale:
        raise UnsupportedError("moment-function route needs B(1) = 0")
    if data.b0 == 0 or data.b2 == 0:
        raise UnsupportedError("moment-function route needs b0 != 0 and b2 != 0")
    if data.a1 == 0:
        raise DegenerateDataError("a1 = 0")
    f = MomentFunction(data, float(mu0))
    m1q, m1q2 = f.mu1(1), f.mu1(2)
    f.c1 = mu0 / m1q
    m2q2 = f.mu2(2)
    if m2q2 == 0:
        raise DegenerateDataError("second solution vanishes at q^2")
    f.c2 = (-data.a0 * mu0 - data.a1 * f.c1 * m1q2) / (data.a1 * m2q2)
    return f


def moment_function(data: PearsonData, n: int, mu0: float = 1.0) -> float:
    """mu_n as the moment function at q^(n+1).

    Falls back to the moment recurrence when B(1) != 0.
    """
    try:
        f = build_moment_function(data, mu0)
    except UnsupportedError:
        if abs(_b_at_one(data)) > 1e-12 * data.scale:
            return moments_by_recurrence(data, mu0, n).mu[n]
        raise
    return f.moment(n)


def moments_hypergeometric(data: PearsonData, mu0: float, N: int) -> MomentSeq:
    f = build_moment_function(data, mu0)
    return MomentSeq(tuple(f.moment(n) for n in range(N + 1)), "hypergeometric")
