"""q-Hahn orthogonal polynomial systems.

Three independent constructions of the monic system P~_n attached to
Pearson data (three-term recurrence, Rodrigues-type iteration, forward
operator product), the structural functions R(x), D(x) feeding the Jacobi
matrix, and the Hahn q-difference operator.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Optional

import mpmath as mp
import numpy as np
from numpy.polynomial import Polynomial

from . import qcalc
from .errors import (DegenerateDataError, MathDomainError, NoPositiveMeasure,
                     NonConvergenceError, PoleError)
from .pearson import PearsonData, WeightSpec, derive, weight_function

ONE = Polynomial([1.0])
ZERO = Polynomial([0.0])


def beta_fn(data: PearsonData, x: float) -> float:
    """Subleading coefficient of P~_n as a function of x = q^n.

    beta(1) = 0 by convention (P~_0 = 1).
    """
    if x == 1.0:
        return 0.0
    q, a1, a0, b2, b1, b0, s1, s2 = _coeffs(data, x)
    den = (1 - q) * ((a1 * (1 - q) - b2) * x * x + b2 * q * q)
    if den == 0:
        raise PoleError(f"beta has a pole at x={x!r}")
    return q * (1 - x) * ((a0 * (1 - q) - b1) * x + b1 * q) / den


def eta_fn(data: PearsonData, x: float) -> float:
    """Second subleading coefficient of P~_n at x = q^n (0 for n = 0, 1)."""
    q = data.q
    if x == 1.0 or x == q:
        return 0.0
    a1, a0, b2, b1, b0 = data.coeffs
    e = a1 * (1 - q) - b2
    d2 = e * x * x + b2 * q * q
    d3 = e * x * x + b2 * q ** 3
    if d2 == 0 or d3 == 0:
        raise PoleError(f"eta has a pole at x={x!r}")
    f = a0 * (1 - q) - b1
    t1 = (f * x + b1 * q * q) * (f * x + b1 * q) / (d2 * d3)
    t2 = b0 * (1 - q) / d3
    return (t1 + t2) * q ** 3 * (1 - x) * (1 - x / q) / ((1 - q) ** 2 * (1 + q))


def structural_R_difference(data: PearsonData, x: float) -> float:
    """R(x) = eta(x) - eta(qx) - beta(x) (beta(x) - beta(qx)); R(1) = 0."""
    if x == 1.0:
        return 0.0
    q = data.q
    b = beta_fn(data, x)
    return eta_fn(data, x) - eta_fn(data, q * x) - b * (b - beta_fn(data, q * x))


def structural_D_difference(data: PearsonData, x: float) -> float:
    """D(x) = beta(x) - beta(qx)."""
    return beta_fn(data, x) - beta_fn(data, data.q * x)


def _coeffs(data: PearsonData, x):
    # coefficients at the precision of x (mpmath when x is an mpf)
    if isinstance(x, mp.mpf):
        q, a1, a0, b2, b1, b0 = (mp.mpf(v) for v in (data.q,) + data.coeffs)
    else:
        q, (a1, a0, b2, b1, b0) = data.q, data.coeffs
    return q, a1, a0, b2, b1, b0, b1 - (1 - q) * a0, b2 - (1 - q) * a1


def structural_R(data: PearsonData, x: float) -> float:
    """R(x) in factored form, free of cancellation for small x.

    With s1 = b1 - (1-q) a0, s2 = b2 - (1-q) a1:

        R(x) = -q x (x-1) (s2 x - b2 q^2) N(x)
               / ((s2 x^2 - b2 q) (s2 x^2 - b2 q^2)^2 (s2 x^2 - b2 q^3))

        N(x) = b0 b2^2 q^4 - b1 b2 s1 q^3 x + q^2 (b1^2 s2 + b2 s1^2 - 2 b0 b2 s2) x^2
               - b1 s1 s2 q x^3 + b0 s2^2 x^4

    Algebraically identical to the difference form of beta and eta.
    """
    if x == 1.0:
        return 0.0
    q, a1, a0, b2, b1, b0, s1, s2 = _coeffs(data, x)
    den = ((s2 * x * x - b2 * q) * (s2 * x * x - b2 * q * q) ** 2
           * (s2 * x * x - b2 * q ** 3))
    if den == 0:
        raise PoleError(f"R has a pole at x={x!r}")
    N = (b0 * b2 * b2 * q ** 4
         + x * (-b1 * b2 * s1 * q ** 3
                + x * (q * q * (b1 * b1 * s2 + b2 * s1 * s1 - 2 * b0 * b2 * s2)
                       + x * (-b1 * s1 * s2 * q + x * b0 * s2 * s2))))
    return -q * x * (x - 1) * (s2 * x - b2 * q * q) * N / den


def structural_D(data: PearsonData, x: float) -> float:
    """D(x) = -x M(x) / ((s2 x^2 - b2) (s2 x^2 - b2 q^2)) with

    M(x) = b2 q (b1 q + s1) - (1+q)(b1 s2 + b2 q s1) x + s2 (b1 q + s1) x^2.
    At x = 1 this is -beta(q).
    """
    if x == 1.0:
        return -beta_fn(data, data.q * x)
    q, a1, a0, b2, b1, b0, s1, s2 = _coeffs(data, x)
    den = (s2 * x * x - b2) * (s2 * x * x - b2 * q * q)
    if den == 0:
        raise PoleError(f"D has a pole at x={x!r}")
    M = b2 * q * (b1 * q + s1) - (1 + q) * (b1 * s2 + b2 * q * s1) * x + s2 * (b1 * q + s1) * x * x
    return -x * M / den


class StructuralSeq:
    """Lazily memoized sequences n -> R(q^n), n -> D(q^n).

    R(q^0) = 0 is enforced.  ``source`` is one of from_pearson,
    from_multiboson, explicit.
    """

    def __init__(self, R: Callable[[int], float], D: Callable[[int], float],
                 source: str = "explicit", q: Optional[float] = None,
                 analytic_type: Optional[str] = None,
                 R_mp: Optional[Callable] = None, D_mp: Optional[Callable] = None):
        self._R_fn = R
        self._D_fn = D
        # optional evaluators returning mpmath numbers at the working precision
        self._R_mp = R_mp
        self._D_mp = D_mp
        self.source = source
        self.q = q
        self.analytic_type = analytic_type
        self._R = {0: 0.0}
        self._D = {}
        self._lock = threading.Lock()

    def R(self, n: int) -> float:
        v = self._R.get(n)
        if v is None:
            if n < 0:
                raise MathDomainError("negative index")
            v = float(self._R_fn(n))
            with self._lock:
                self._R.setdefault(n, v)
        return v

    def D(self, n: int) -> float:
        v = self._D.get(n)
        if v is None:
            if n < 0:
                raise MathDomainError("negative index")
            v = float(self._D_fn(n))
            with self._lock:
                self._D.setdefault(n, v)
        return v

    def R_mp(self, n: int):
        if n == 0:
            return mp.mpf(0)
        return self._R_mp(n) if self._R_mp else mp.mpf(self.R(n))

    def D_mp(self, n: int):
        return self._D_mp(n) if self._D_mp else mp.mpf(self.D(n))

    def R_array(self, start: int, stop: int) -> np.ndarray:
        return np.array([self.R(n) for n in range(start, stop)])

    def D_array(self, start: int, stop: int) -> np.ndarray:
        return np.array([self.D(n) for n in range(start, stop)])

    @classmethod
    def explicit(cls, R, D=None, q=None):
        return cls(R, D if D is not None else (lambda n: 0.0), "explicit", q)


def structural_functions(data: PearsonData) -> StructuralSeq:
    """Structural sequences R(q^n), D(q^n) of the Pearson data."""
    q = data.q
    return StructuralSeq(lambda n: structural_R(data, q ** n),
                         lambda n: structural_D(data, q ** n),
                         "from_pearson", q, analytic_type="D",
                         R_mp=lambda n: structural_R(data, mp.mpf(q) ** n),
                         D_mp=lambda n: structural_D(data, mp.mpf(q) ** n))


@dataclass(frozen=True)
class MonicOPS:
    polys: tuple
    data: Optional[PearsonData] = None

    def __getitem__(self, n):
        return self.polys[n]

    def __len__(self):
        return len(self.polys)


def ops_by_recurrence(data: PearsonData, N: int, seq: Optional[StructuralSeq] = None) -> MonicOPS:
    """P~_0..P~_N from P~_{n+1} = (w - D(q^n)) P~_n - R(q^n) P~_{n-1}."""
    seq = seq or structural_functions(data)
    polys = [ONE]
    prev = ZERO
    for n in range(N):
        new = Polynomial([-seq.D(n), 1.0]) * polys[-1] - seq.R(n) * prev
        prev = polys[-1]
        polys.append(new)
    return MonicOPS(tuple(polys), data)


def rodrigues_leading(data: PearsonData, n: int) -> float:
    """alpha_n = q^{n(n-1)/2} prod_{l=0}^{n-1} (a1 - b2 [-2n+2+l])."""
    q = data.q
    p = q ** (n * (n - 1) / 2)
    for l in range(n):
        p *= data.a1 - data.b2 * qcalc.q_bracket(-2 * n + 2 + l, q)
    return p


def rodrigues_R(data: PearsonData, n: int, k: int) -> Polynomial:
    """R_{k,n} from R_{0,n} = 1 by the exact polynomial recurrence.

    R_{k+1,n} = A Q R + B(q^-s w) d_q R + [(B(q^-s w) - B(w)) / ((1-q) w)] Q R,
    s = n - 1 - k.
    """
    q = data.q
    A, B = data.A, data.B
    R = ONE
    for j in range(k):
        s = n - 1 - j
        Bs = qcalc.scale_poly(B, q ** (-s))
        diff = (Bs - B).coef
        quot = Polynomial(diff[1:] / (1 - q)) if diff.size > 1 else ZERO
        QR = qcalc.scale_poly(R, q)
        R = A * QR + Bs * qcalc.q_derivative_poly(R, q) + quot * QR
    return R


def ops_by_rodrigues(data: PearsonData, N: int) -> MonicOPS:
    polys = [ONE]
    for n in range(1, N + 1):
        alpha = rodrigues_leading(data, n)
        if alpha == 0:
            raise DegenerateDataError(f"Rodrigues normalizer vanishes at n={n}")
        polys.append(rodrigues_R(data, n, n) / alpha)
    return MonicOPS(tuple(polys), data)


def forward_prefactor(data: PearsonData, n: int, k: int) -> float:
    dk = derive(data, k)
    return dk.a1 - data.b2 * qcalc.q_bracket(-n + 1 + k, data.q)


def ops_by_forward(data: PearsonData, N: int) -> MonicOPS:
    """P~_n = (A^(0) + B d_q Q^-1) ... (A^(n-1) + B d_q Q^-1) 1, normalized."""
    q = data.q
    B = data.B
    polys = [ONE]
    derived = [derive(data, k) for k in range(N)]
    for n in range(1, N + 1):
        p = ONE
        pref = 1.0
        for k in reversed(range(n)):
            Ak = derived[k].A
            p = Ak * p + B * qcalc.q_derivative_poly(qcalc.scale_poly(p, 1 / q), q)
            pref *= derived[k].a1 - data.b2 * qcalc.q_bracket(-n + 1 + k, q)
        if pref == 0:
            raise DegenerateDataError(f"forward prefactor vanishes at n={n}")
        polys.append(p / pref)
    return MonicOPS(tuple(polys), data)


def hahn_apply(data: PearsonData, p: Polynomial) -> Polynomial:
    """A d_q p + B d_q Q^-1 d_q p."""
    q = data.q
    dp = qcalc.q_derivative_poly(p, q)
    return data.A * dp + data.B * qcalc.q_derivative_poly(qcalc.scale_poly(dp, 1 / q), q)


def hahn_eigenvalue(data: PearsonData, n: int) -> float:
    if n < 1:
        raise MathDomainError("n must be >= 1")
    if n == 1:
        return data.a1
    q = data.q
    bn = qcalc.q_bracket(n, q)
    return data.a1 * bn + data.b2 * bn * qcalc.q_bracket(n - 1, q) * q ** (-(n - 1))


def qderiv_closure_check(data: PearsonData, n: int, k: int,
                         ops: Optional[MonicOPS] = None) -> Polynomial:
    """d_q^k P~_n divided by [n][n-1]...[n-k+1] (monic)."""
    if not 0 <= k < n + 1:
        raise MathDomainError("need 0 <= k <= n")
    q = data.q
    p = (ops or ops_by_recurrence(data, n))[n]
    norm = 1.0
    for j in range(k):
        p = qcalc.q_derivative_poly(p, q)
        norm *= qcalc.q_bracket(n - j, q)
    return p / norm


def subleading_by_iteration(data: PearsonData, n: int):
    """(beta_n/alpha_n, gamma_n/alpha_n) from the coefficient recurrences of R_{k,n}."""
    q = data.q
    a1, a0, b2, b1, b0 = data.coeffs
    br = lambda m: qcalc.q_bracket(m, q)
    al, be, ga = 1.0, 0.0, 0.0
    for k in range(n):
        al, be, ga = (
            (a1 - b2 * br(-2 * n + 2 + k)) * q ** k * al,
            (a0 - b1 * br(-n + 1)) * q ** k * al
            + (a1 - b2 * br(-2 * n + 3 + k)) * q ** (k - 1) * be,
            b0 * br(k) * al
            + (a0 - b1 * br(-n + 2)) * q ** (k - 1) * be
            + (a1 - b2 * br(-2 * n + 4 + k)) * q ** (k - 2) * ga,
        )
    return be / al, ga / al


def subleading_closed_form(data: PearsonData, n: int):
    """Closed forms for beta(q^n), gamma(q^n) of the monic P~_n (n >= 2)."""
    q = data.q
    a1, a0, b2, b1, b0 = data.coeffs
    br = lambda m: qcalc.q_bracket(m, q)
    e2 = a1 - b2 * br(-2 * n + 2)
    e3 = a1 - b2 * br(-2 * n + 3)
    beta = br(n) / q ** (n - 1) * (a0 - b1 * br(-n + 1)) / e2
    gamma = ((1 - q ** n) * (1 - q ** (n - 1)) / ((1 - q) ** 2 * (1 + q))
             * ((a0 - b1 * br(-n + 2)) * (a0 - b1 * br(-n + 1)) + b0 * e2) / (e2 * e3)
             * q ** (-(2 * n - 3)))
    return beta, gamma


def monic_norms_from_R(seq: StructuralSeq, mu0: float, N: int) -> np.ndarray:
    """||P~_n||^2 = mu0 R(q) ... R(q^n) for n = 0..N."""
    out = np.empty(N + 1)
    v = mu0
    out[0] = v
    for n in range(1, N + 1):
        v *= seq.R(n)
        out[n] = v
    return out


def monic_values(seq: StructuralSeq, w, N: int) -> np.ndarray:
    """Values P~_0(w)..P~_N(w) from the three-term recurrence (w may be an array)."""
    w = np.asarray(w, dtype=float)
    out = np.empty((N + 1,) + w.shape)
    out[0] = 1.0
    if N >= 1:
        out[1] = w - seq.D(0)
    for n in range(1, N):
        out[n + 1] = (w - seq.D(n)) * out[n] - seq.R(n) * out[n - 1]
    return out


def monic_values_mp(seq: StructuralSeq, w, N: int) -> list:
    """As monic_values for scalar w, in mpmath at the current working precision."""
    w = mp.mpf(w)
    out = [mp.mpf(1)]
    if N >= 1:
        out.append(w - seq.D_mp(0))
    for n in range(1, N):
        out.append((w - seq.D_mp(n)) * out[n] - seq.R_mp(n) * out[n - 1])
    return out


def recurrence_dps(seq: StructuralSeq, N: int, base: int = 30) -> int:
    """Working precision for evaluating P~_0..P~_N at mass points.

    At a mass point of a q-discrete measure the orthonormal polynomials form
    the minimal solution of the recurrence, so forward evaluation amplifies
    rounding by about 1/sqrt(R(q^n)) per step; add those digits to ``base``.
    """
    lost = 0.0
    for n in range(1, N + 1):
        r = seq.R(n)
        if r > 0:
            lost += max(0.0, -0.5 * np.log10(r))
    return base + int(np.ceil(2 * lost))


def jackson_inner(spec: WeightSpec, f, g=None, tol: float = 1e-16, rho=None) -> float:
    """Integral of f g rho over the support with the Jackson measure."""
    if spec.support is None:
        raise NoPositiveMeasure("spec has no support", spec)
    rho = rho or weight_function(spec)
    lo, hi = spec.support
    if g is None:
        h = lambda w: f(w) * rho(w)
    else:
        h = lambda w: f(w) * g(w) * rho(w)
    return qcalc.jackson_integral(h, lo, hi, spec.q, tol)


def _mp_jackson(spec: WeightSpec, values, N: int, tol: float, rho):
    """Jackson sums of values(w)[i] * values(w)[j] * rho(w) for all i <= j <= N.

    ``values`` returns mpmath numbers; the weight is evaluated in floating
    point (its relative error enters the result only linearly).
    """
    q = spec.q
    lo, hi = spec.support
    G = [[mp.mpf(0)] * (N + 1) for _ in range(N + 1)]
    scale = mp.mpf(0)
    min_iter = int(np.ceil(np.log(qcalc.MIN_DEPTH) / np.log(q)))
    recent = []
    for k in range(qcalc.MAX_ITER):
        step = 0.0
        for e in (hi, lo):
            if e == 0:
                continue
            w = e * q ** k
            m = (1 - q) * q ** k * abs(e) * rho(w)
            v = values(w)
            for i in range(N + 1):
                vi = v[i] * m
                for j in range(i, N + 1):
                    G[i][j] += vi * v[j]
            t = max(abs(v[i]) for i in range(N + 1)) ** 2 * m
            step = max(step, float(t))
        scale += step
        recent = (recent + [step])[-5:]
        if k >= min_iter and max(recent) * q / (1 - q) <= tol * float(scale):
            break
    else:
        raise NonConvergenceError("Jackson Gram sums did not converge")
    out = np.empty((N + 1, N + 1))
    for i in range(N + 1):
        for j in range(i, N + 1):
            out[i, j] = out[j, i] = float(G[i][j])
    return out


def orthonormalize(ops: MonicOPS, spec: WeightSpec, tol: float = 1e-16,
                   seq: Optional[StructuralSeq] = None, dps: Optional[int] = None):
    """Return [(P_n, ||P~_n||)] with P_n = P~_n / ||P~_n||.

    Norms come from Jackson integration of P~_n^2 rho.  When the structural
    sequence is known (``seq``, or derived from ``ops.data``) the integrand is
    evaluated through the recurrence in extended precision (``dps`` digits,
    chosen by ``recurrence_dps`` when None); otherwise the polynomials are
    evaluated directly in floating point.
    """
    if not spec.positive:
        raise NoPositiveMeasure("orthonormalization needs a positive weight", spec)
    rho = weight_function(spec)
    N = len(ops) - 1
    if seq is None and ops.data is not None:
        seq = structural_functions(ops.data)
    if seq is not None:
        dps = dps or recurrence_dps(seq, N)
        with mp.workdps(dps):
            G = _mp_jackson(spec, lambda w: monic_values_mp(seq, w, N), N, tol, rho)
        n2 = np.diag(G)
    else:
        n2 = np.array([jackson_inner(spec, p, p, tol, rho) for p in ops.polys])
    out = []
    for p, v in zip(ops.polys, n2):
        if not v > 0:
            raise NoPositiveMeasure(f"nonpositive norm {v!r}: weight wrongly accepted", spec)
        nrm = float(np.sqrt(v))
        out.append((p / nrm, nrm))
    return out


def orthonormal_gram(spec: WeightSpec, seq: StructuralSeq, N: int,
                     tol: float = 1e-16, dps: Optional[int] = None) -> np.ndarray:
    """Gram matrix of the orthonormal P_0..P_N under the Jackson measure.

    P_n = P~_n / sqrt(mu0 R(q) ... R(q^n)), evaluated through the recurrence
    in extended precision; mu0 is the Jackson integral of the weight.
    """
    rho = weight_function(spec)
    dps = dps or recurrence_dps(seq, N)
    with mp.workdps(dps):
        mu0 = _mp_jackson(spec, lambda w: [mp.mpf(1)], 0, tol, rho)[0, 0]
        norms = [mp.sqrt(mp.mpf(mu0))]
        for n in range(1, N + 1):
            norms.append(norms[-1] * mp.sqrt(seq.R_mp(n)))

        def values(w):
            v = monic_values_mp(seq, w, N)
            return [a / b for a, b in zip(v, norms)]

        return _mp_jackson(spec, values, N, tol, rho)
