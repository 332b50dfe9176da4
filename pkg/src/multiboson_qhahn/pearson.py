"""Pearson q-difference equation: data, weight classification, support.

The Pearson data are two polynomials A(w) = a1 w + a0 and
B(w) = b2 w^2 + b1 w + b0.  The weight rho solves

    d_q(rho B)(w) = rho(w) A(w),

equivalently rho(w) S(w) = rho(qw) B(qw) with S(w) = B(w) - (1-q) w A(w).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from . import qcalc
from .errors import (DegenerateDataError, MathDomainError, NoPositiveMeasure,
                     PoleError, UnsupportedError)

ZERO_RTOL = 1e-12
INT_TOL = 1e-9
K_SEARCH = 200
SIGN_CHECK_NODES = 200

CASES = ("i", "ii", "iii", "iv", "v", "vi-a", "vi-b", "vii-a", "vii-b", "viii")


@dataclass(frozen=True)
class PearsonData:
    """Coefficients of A and B together with the deformation parameter q."""

    a1: float
    a0: float
    b2: float
    b1: float
    b0: float
    q: float

    def __post_init__(self):
        for name in ("a1", "a0", "b2", "b1", "b0", "q"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise MathDomainError(f"{name} must be finite")
            object.__setattr__(self, name, float(v))
        qcalc.check_q(self.q)
        if all(c == 0 for c in self.coeffs):
            raise DegenerateDataError("A and B are both the zero polynomial")

    @property
    def coeffs(self):
        return (self.a1, self.a0, self.b2, self.b1, self.b0)

    @property
    def A(self) -> Polynomial:
        return Polynomial([self.a0, self.a1])

    @property
    def B(self) -> Polynomial:
        return Polynomial([self.b0, self.b1, self.b2])

    @property
    def s2(self) -> float:
        return self.b2 - (1.0 - self.q) * self.a1

    @property
    def s1(self) -> float:
        return self.b1 - (1.0 - self.q) * self.a0

    @property
    def S(self) -> Polynomial:
        """B(w) - (1-q) w A(w)."""
        return Polynomial([self.b0, self.s1, self.s2])

    @property
    def scale(self) -> float:
        return max(abs(c) for c in self.coeffs)

    def is_zero(self, x: float) -> bool:
        return x == 0 or abs(x) <= ZERO_RTOL * self.scale

    def scaled(self, c: float) -> "PearsonData":
        return PearsonData(c * self.a1, c * self.a0, c * self.b2, c * self.b1,
                           c * self.b0, self.q)

    def with_A(self, a1: float, a0: float) -> "PearsonData":
        return replace(self, a1=a1, a0=a0)

    def as_dict(self):
        return {"a1": self.a1, "a0": self.a0, "b2": self.b2, "b1": self.b1,
                "b0": self.b0, "q": self.q}


@dataclass(frozen=True)
class WeightSpec:
    """Classified weight.

    ``case`` is one of CASES.  ``variant`` refines it: the letter alpha..zeta
    for case i, "1"/"2" (support right/left of 0) for cases iv-vi.
    ``roots_shift`` may hold a complex conjugate pair (stored with im > 0 first).
    """

    case: str
    q: float
    roots_B: tuple = ()
    roots_shift: tuple = ()
    r: Optional[float] = None
    support: Optional[tuple] = None
    positive: bool = True
    variant: str = ""
    K: Optional[int] = None
    reason: str = ""

    @property
    def label(self) -> str:
        return f"{self.case}-{self.variant}" if self.variant else self.case

    @property
    def base_case(self) -> str:
        return self.case.split("-")[0]

    def as_dict(self):
        def enc(z):
            if isinstance(z, complex):
                return [z.real, z.imag]
            return z
        return {
            "case": self.case,
            "variant": self.variant,
            "label": self.label,
            "q": self.q,
            "roots_B": [enc(z) for z in self.roots_B],
            "roots_shift": [enc(z) for z in self.roots_shift],
            "r": self.r,
            "support": list(self.support) if self.support else None,
            "positive": self.positive,
            "K": self.K,
            "reason": self.reason,
        }


def quadratic_roots(c2: float, c1: float, c0: float):
    """Roots of c2 x^2 + c1 x + c0 (c2 != 0), numerically stable branch.

    Real roots come back sorted; a complex pair as (z, conj z) with Im z > 0.
    """
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc >= 0:
        sq = math.sqrt(disc)
        t = -0.5 * (c1 + math.copysign(sq, c1))
        if t == 0:
            return (0.0, 0.0)
        r1, r2 = t / c2, c0 / t
        return tuple(sorted((r1, r2)))
    sq = math.sqrt(-disc)
    z = complex(-c1 / (2.0 * c2), abs(sq / (2.0 * c2)))
    return (z, z.conjugate())


def _r_from(q: float, ratio: float) -> float:
    # q^{-r} = |ratio|
    return -math.log(abs(ratio)) / math.log(q)


def _near_int(r: float) -> bool:
    return abs(r - round(r)) <= INT_TOL


def _raw_case(d: PearsonData) -> WeightSpec:
    q = d.q
    z = d.is_zero
    b0, b1, b2, s1, s2 = d.b0, d.b1, d.b2, d.s1, d.s2
    if not z(b0):
        if z(b2):
            raise UnsupportedError("b0 != 0 but b2 = 0: B has a single root, outside "
                                   "the eight-case classification")
        rb = quadratic_roots(b2, b1, b0)
        if not z(s2):
            return WeightSpec("i", q, rb, quadratic_roots(s2, s1, b0))
        if not z(s1):
            return WeightSpec("ii", q, rb, (-b0 / s1,))
        return WeightSpec("iii", q, rb, ())
    if z(b2):
        raise UnsupportedError("b0 = b2 = 0 is outside the eight-case classification")
    if not z(b1):
        a = -b1 / b2
        if not z(s1):
            r = _r_from(q, q * b1 / s1)
            if not z(s2):
                return WeightSpec("iv", q, (a,), (-s1 / s2,), r)
            return WeightSpec("v", q, (a,), (), r)
        if z(s2):
            raise DegenerateDataError("B(w) - (1-q) w A(w) vanishes identically")
        ratio = q * b1 / s2
        tag = "vi-a" if ratio > 0 else "vi-b"
        return WeightSpec(tag, q, (a,), (), _r_from(q, ratio))
    if not z(s1):
        ratio = q * q * b2 / s1
        tag = "vii-a" if ratio > 0 else "vii-b"
        c = (-s1 / s2,) if not z(s2) else ()
        return WeightSpec(tag, q, (), c, _r_from(q, ratio))
    if z(s2):
        raise DegenerateDataError("B(w) - (1-q) w A(w) vanishes identically")
    return WeightSpec("viii", q, (), (), _r_from(q, q * q * b2 / s2))


def _positivity(spec: WeightSpec, d: PearsonData) -> WeightSpec:
    """Apply the support/positivity conditions; returns an updated spec."""
    q = spec.q
    case = spec.base_case

    def reject(reason, **kw):
        return replace(spec, positive=False, reason=reason, **kw)

    if case in ("vii",):
        return reject("R(q^n) is not positive for large n in this case")
    if case == "viii":
        return reject("R(q^n) and D(q^n) vanish identically in this case")

    if case in ("i", "ii", "iii"):
        a, b = spec.roots_B
        if isinstance(a, complex) or not (a < 0 < b):
            return reject("B must have real roots a < 0 < b")
        spec = replace(spec, support=(a, b))
        if case == "ii":
            (c,) = spec.roots_shift
            if not (c < a or c > b):
                return reject("need c < a or c > b")
        if case == "i":
            c, d_ = spec.roots_shift
            if isinstance(c, complex):
                spec = replace(spec, variant="alpha")
            else:
                lo, hi = min(c, d_), max(c, d_)
                if lo < a and hi > b:
                    spec = replace(spec, variant="beta")
                elif hi < a:
                    spec = replace(spec, variant="gamma")
                elif lo > b:
                    spec = replace(spec, variant="epsilon")
                elif a < lo and hi < 0:
                    K = _find_K(lo, hi, a, q, negative=True)
                    if K is None:
                        return reject("c, d in (a, 0) but no K <= %d found" % K_SEARCH,
                                      variant="undetermined")
                    if K < 0:
                        return reject("c, d lie in different Jackson cells of [a, 0)")
                    spec = replace(spec, variant="delta", K=K)
                elif 0 < lo and hi < b:
                    K = _find_K(lo, hi, b, q, negative=False)
                    if K is None:
                        return reject("c, d in (0, b) but no K <= %d found" % K_SEARCH,
                                      variant="undetermined")
                    if K < 0:
                        return reject("c, d lie in different Jackson cells of (0, b]")
                    spec = replace(spec, variant="zeta", K=K)
                else:
                    return reject("c, d satisfy none of the admissible configurations")
    else:
        (a,) = spec.roots_B
        r = spec.r
        if case in ("iv", "v"):
            if d.q * d.b1 / d.s1 <= 0:
                return reject("q b1 / (b1 - (1-q) a0) < 0: the w^r solution picks up "
                              "alternating signs on the grid")
        if a > 0:
            spec = replace(spec, support=(0.0, a), variant="1")
        else:
            spec = replace(spec, support=(a, 0.0), variant="2")
            if not _near_int(r) or int(round(r)) % 2:
                return reject("negative support needs an even integer r (a^r > 0)")
        if case == "iv":
            (c,) = spec.roots_shift
            lo, hi = spec.support
            if lo < c < hi:
                return reject("c must lie outside the support interval")
        if r <= -1.0:
            return reject("r <= -1: the Jackson integral of the weight diverges")

    # numerical guard: the weight must be finite and positive on the grid
    lo, hi = spec.support
    for end in (lo, hi):
        if end == 0:
            continue
        for k in range(SIGN_CHECK_NODES):
            w = end * q ** k
            try:
                lw, sg = log_weight(spec, w)
            except MathDomainError as exc:
                return reject(f"weight undefined at grid node {w!r}: {exc}")
            if lw == -math.inf:
                # zero of the weight: allowed only at the B-root endpoint itself
                if k == 0:
                    continue
                return reject(f"weight vanishes inside the support at {w!r}")
            if not (sg > 0) or not math.isfinite(lw):
                return reject(f"weight is not positive at grid node {w!r}")
    return spec


def _find_K(lo, hi, e, q, negative):
    """Find K >= 1 with both lo, hi in the open Jackson cell between q^(K-1) e and q^K e.

    Returns None when nothing is found up to K_SEARCH and -1 when the two
    points are in different cells.
    """
    for K in range(1, K_SEARCH + 1):
        x1, x2 = q ** (K - 1) * e, q ** K * e
        cell_lo, cell_hi = (x1, x2) if negative else (x2, x1)
        in_lo = cell_lo < lo < cell_hi
        in_hi = cell_lo < hi < cell_hi
        if in_lo and in_hi:
            return K
        if in_lo or in_hi:
            return -1
    return None


def classify(data: PearsonData, strict: bool = True) -> WeightSpec:
    """Classify the Pearson data and fix the support of the weight.

    With ``strict`` (default) data that do not give a positive measure raise
    ``NoPositiveMeasure`` (the weight spec is attached as ``exc.spec``); otherwise
    the weight spec is returned with ``positive=False``.
    """
    spec = _positivity(_raw_case(data), data)
    if strict and not spec.positive:
        raise NoPositiveMeasure(f"case {spec.label}: {spec.reason}", spec)
    return spec


def _power_log(w: float, r: float):
    # log|w^r| and sign, with the convention for negative w
    if r is None or r == 0:
        return 0.0, 1.0
    if w > 0:
        return r * math.log(w), 1.0
    if w == 0:
        if r > 0:
            return -math.inf, 1.0
        raise PoleError("w^r with r < 0 at w = 0")
    if not _near_int(r):
        raise MathDomainError("w^r with w < 0 requires integer r")
    n = int(round(r))
    return n * math.log(-w), (1.0 if n % 2 == 0 else -1.0)


def log_weight(spec: WeightSpec, w: float, tol: float = 1e-17):
    """Return (log|rho(w)|, sign(rho(w))) for the case formula."""
    q = spec.q
    case = spec.case
    num, den = [], []
    if case in ("i", "ii", "iii"):
        a, b = spec.roots_B
        num = [q * w / a, q * w / b]
        den = [w / c for c in spec.roots_shift]
    elif case in ("iv", "v", "vi-a", "vi-b"):
        (a,) = spec.roots_B
        num = [q * w / a]
        if case == "iv":
            den = [w / spec.roots_shift[0]]
        elif case in ("vi-a", "vi-b"):
            if w == 0:
                raise MathDomainError("weight formula is singular at w = 0")
            s = -1.0 if case == "vi-a" else 1.0
            den = [s * w, s * q / w]
    elif case in ("vii-a", "vii-b"):
        if w == 0:
            raise MathDomainError("weight formula is singular at w = 0")
        s = -1.0 if case == "vii-a" else 1.0
        num = [s * w, s * q / w]
        den = [w / c for c in spec.roots_shift]
    elif case != "viii":
        raise MathDomainError(f"unknown case {case!r}")

    lw, sg = _power_log(w, spec.r) if case not in ("i", "ii", "iii") else (0.0, 1.0)
    for x in num:
        l, s = qcalc.log_q_pochhammer(x, q, tol=tol)
        if s == 0:
            return -math.inf, 0.0
        lw += l
        sg = sg * s
    for x in den:
        l, s = qcalc.log_q_pochhammer(x, q, tol=tol)
        if s == 0:
            raise PoleError(f"weight has a pole at w={w!r}")
        lw -= l
        sg = sg * (s.conjugate() if isinstance(s, complex) else s)
    if isinstance(sg, complex):
        # conjugate pairs: the phase is real up to rounding
        sg = 1.0 if sg.real > 0 else -1.0
    return lw, sg


def weight_eval(spec: WeightSpec, data: Optional[PearsonData], w: float,
                tol: float = 1e-17) -> float:
    """Value of the (unnormalized) weight rho at w."""
    if data is not None and data.q != spec.q:
        raise MathDomainError("spec and data use different q")
    lw, sg = log_weight(spec, w, tol)
    if lw == -math.inf:
        return 0.0
    return sg * math.exp(lw)


def weight_function(spec: WeightSpec, tol: float = 1e-17):
    """Memoized callable w -> rho(w)."""
    cache = {}

    def rho(w):
        w = float(w)
        v = cache.get(w)
        if v is None:
            v = cache[w] = weight_eval(spec, None, w, tol)
        return v

    return rho


def pearson_residual(data: PearsonData, spec: WeightSpec, w: float,
                     relative: bool = False, rho=None) -> float:
    """d_q(rho B)(w) - rho(w) A(w).

    With ``relative=True`` the residual is divided by the local scale
    (|rho B(w)| + |rho B(qw)|) / ((1-q)|w|) + |rho A(w)|, computed from
    log-ratios so that it stays meaningful where rho under- or overflows.
    ``rho`` optionally replaces the case formula (negative controls).
    """
    q = data.q
    A, B = data.A, data.B
    if rho is not None:
        r0, r1 = rho(w), rho(q * w)
        res = (r0 * B(w) - r1 * B(q * w)) / ((1 - q) * w) - r0 * A(w)
        if not relative:
            return res
        sc = (abs(r0 * B(w)) + abs(r1 * B(q * w))) / ((1 - q) * abs(w)) + abs(r0 * A(w))
        return res / sc if sc else res
    l0, s0 = log_weight(spec, w)
    l1, s1 = log_weight(spec, q * w)
    if not relative:
        r0 = 0.0 if l0 == -math.inf else s0 * math.exp(l0)
        r1 = 0.0 if l1 == -math.inf else s1 * math.exp(l1)
        return (r0 * B(w) - r1 * B(q * w)) / ((1 - q) * w) - r0 * A(w)
    # divide through by the larger of |rho(w)|, |rho(qw)|
    m = max(l0, l1)
    r0 = 0.0 if l0 == -math.inf else s0 * math.exp(l0 - m)
    r1 = 0.0 if l1 == -math.inf else s1 * math.exp(l1 - m)
    res = (r0 * B(w) - r1 * B(q * w)) / ((1 - q) * w) - r0 * A(w)
    sc = (abs(r0 * B(w)) + abs(r1 * B(q * w))) / ((1 - q) * abs(w)) + abs(r0 * A(w))
    return res / sc if sc else res


def derive(data: PearsonData, k: int) -> PearsonData:
    """Pearson data of rho^(k)(w) = rho(q^k w) B(q w) ... B(q^k w).

    B is unchanged; A^(k)(w) = q^k A(q^k w) + sum_{j<k} q^j (d_q B)(q^j w),
    i.e. a1 -> q^(2k) a1 + b2 (1 - q^(2k)) / (1 - q), a0 -> q^k a0 + b1 [k].
    """
    if k < 0:
        raise MathDomainError("k must be nonnegative")
    if k == 0:
        return data
    q = data.q
    a1 = q ** (2 * k) * data.a1 + data.b2 * (1.0 - q ** (2 * k)) / (1.0 - q)
    a0 = q ** k * data.a0 + data.b1 * qcalc.q_bracket(k, q)
    return data.with_A(a1, a0)


def derived_weight(data: PearsonData, spec: WeightSpec, k: int):
    """rho^(k) as a callable, built directly from rho (not from derive)."""
    q = data.q
    B = data.B
    rho = weight_function(spec)

    def f(w):
        v = rho(q ** k * w)
        for j in range(1, k + 1):
            v *= B(q ** j * w)
        return v

    return f


def support_grid(spec: WeightSpec, depth: int):
    """First ``depth`` Jackson nodes on each nonzero endpoint of the support.

    Returns ``(nodes, factors)`` where the factor of node q^k e is
    (1-q) q^k |e| (the Jackson measure with the orientation sign folded in).
    """
    if depth < 1:
        raise MathDomainError("depth must be >= 1")
    if spec.support is None:
        raise NoPositiveMeasure("spec has no support interval", spec)
    q = spec.q
    lo, hi = spec.support
    nodes, fac = [], []
    for e in (hi, lo):
        if e == 0:
            continue
        for k in range(depth):
            nodes.append(e * q ** k)
            fac.append((1 - q) * q ** k * abs(e))
    return np.array(nodes), np.array(fac)


def from_roots(case: str, q: float, a=None, b=None, c=None, d=None, r=None,
               b2: float = 1.0) -> PearsonData:
    """Build Pearson data from the root description of a case.

    Cases i-iii use B = b2 (w-a)(w-b); S has roots c, d (case i) or c (ii).
    Cases iv-vi use B = b2 w (w-a) and r; case iv also needs c.
    Complex c, d must be a conjugate pair.
    """
    q = qcalc.check_q(q)
    base = case.split("-")[0]
    if base in ("i", "ii", "iii"):
        b0 = b2 * a * b
        b1 = -b2 * (a + b)
        if base == "i":
            kappa = b0 / (c * d)
            s2 = kappa
            s1 = -kappa * (c + d)
            s2, s1 = float(np.real(s2)), float(np.real(s1))
        elif base == "ii":
            s2, s1 = 0.0, -b0 / c
        else:
            s2, s1 = 0.0, 0.0
    elif base in ("iv", "v", "vi"):
        b0 = 0.0
        b1 = -b2 * a
        if base == "vi":
            s1 = 0.0
            s2 = q ** (r + 1) * b1
            if case.endswith("b"):
                s2 = -s2
        else:
            s1 = q ** (r + 1) * b1
            s2 = -s1 / c if base == "iv" else 0.0
    else:
        raise UnsupportedError(f"from_roots does not build case {case!r}")
    a1 = (b2 - s2) / (1 - q)
    a0 = (b1 - s1) / (1 - q)
    return PearsonData(a1, a0, b2, b1, b0, q)
