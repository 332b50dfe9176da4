"""Jacobi operators of reduced Hamiltonians and their spectral data.

H_red acts on the orbit basis |n> as the symmetric tridiagonal matrix with
diagonal D(q^n) and off-diagonal sqrt(R(q^(n+1))).  Truncating it to M x M
gives the Gauss rule of the spectral measure d sigma = <0| dE |0>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import mpmath as mp
import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import MathDomainError, NonConvergenceError
from .qhahn import StructuralSeq

DIVERGENCE_SLOPE = -1.0
C_EPS = 0.1


@dataclass(frozen=True)
class JacobiOperator:
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def M(self) -> int:
        return len(self.diag)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    normalized: bool = True

    def moment(self, k: int) -> float:
        return float(np.sum(self.weights * self.nodes ** k))

    def as_rows(self):
        return list(zip(self.nodes.tolist(), self.weights.tolist()))


class TypeVerdict(NamedTuple):
    verdict: str
    partial_sum: float
    horizon: int
    slope: float = math.nan


class NevanlinnaPartial(NamedTuple):
    A: float
    B: float
    C: float
    D: float
    last_increment: float


def jacobi_matrix(seq: StructuralSeq, M: int) -> JacobiOperator:
    """diag[n] = D(q^n), offdiag[n] = sqrt(R(q^(n+1)))."""
    if M < 1:
        raise MathDomainError("M must be at least 1")
    d = np.array([seq.D(n) for n in range(M)], dtype=float)
    R = np.array([seq.R(n) for n in range(1, M)], dtype=float)
    bad = np.nonzero(~(R > 0))[0]
    if bad.size:
        n = int(bad[0]) + 1
        raise MathDomainError(f"R(q^{n}) = {R[bad[0]]!r} is not positive")
    return JacobiOperator(d, np.sqrt(R))


def spectrum(J: JacobiOperator) -> DiscreteMeasure:
    """Gauss rule of the truncated operator: eigenvalues and squared first components."""
    if J.M == 1:
        return DiscreteMeasure(np.array(J.diag, dtype=float), np.array([1.0]))
    try:
        w, v = eigh_tridiagonal(J.diag, J.offdiag, lapack_driver="stev")
    except LinAlgError as exc:
        raise NonConvergenceError(f"tridiagonal eigensolver failed: {exc}") from exc
    weights = v[0, :] ** 2
    weights = weights / weights.sum()
    return DiscreteMeasure(w, weights, True)


def node_displacement(seq: StructuralSeq, M: int) -> float:
    """Largest distance from a node of the M/2 rule to the nearest node of the M rule."""
    a = spectrum(jacobi_matrix(seq, M)).nodes
    b = spectrum(jacobi_matrix(seq, max(1, M // 2))).nodes
    return float(np.max(np.min(np.abs(b[:, None] - a[None, :]), axis=1)))


def classify_type(seq: StructuralSeq, horizon: int = 200) -> TypeVerdict:
    """Heuristic D / C-candidate verdict from the terms R(q^n)^(-1/2).

    Sequences with a known analytic type (Pearson data) keep it.  Otherwise
    the log-log slope s of the terms over the second half of the horizon
    decides: s >= -1 (or terms bounded below) means a divergent sum and type
    D, s < -(1 + 0.1) a convergent sum and a type C candidate.
    """
    if horizon < 10:
        raise MathDomainError("horizon must be at least 10")
    n = np.arange(1, horizon + 1)
    R = np.array([seq.R(int(i)) for i in n], dtype=float)
    if np.any(R <= 0):
        raise MathDomainError("R must be positive on the horizon")
    t = 1.0 / np.sqrt(R)
    total = float(t.sum())
    half = slice(horizon // 2, horizon)
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(n[half]), np.log(t[half]), 1)[0])
    if seq.analytic_type in ("D", "C"):
        return TypeVerdict(seq.analytic_type, total, horizon, slope)
    if slope >= DIVERGENCE_SLOPE - 1e-3 or t[half].min() >= 0.5 * t[half].max():
        return TypeVerdict("D", total, horizon, slope)
    if slope < -(1.0 + C_EPS):
        return TypeVerdict("C-candidate", total, horizon, slope)
    return TypeVerdict("inconclusive", total, horizon, slope)


def exp_R(seq: StructuralSeq, x: float, tol: float = 1e-16, max_terms: int = 100000) -> float:
    """Sum_n x^n / (R(q) ... R(q^n)) with a geometric tail bound."""
    if tol <= 0:
        raise MathDomainError("tol must be positive")
    s = 1.0
    t = 1.0
    if x == 0:
        return 1.0
    above = 0
    for n in range(1, max_terms):
        R = seq.R(n)
        if R <= 0:
            raise MathDomainError(f"R(q^{n}) must be positive")
        r = abs(x) / R
        t *= x / R
        s += t
        if r < 1:
            above = 0
            # ratios of a positive-R series settle; look one step ahead for the bound
            r_next = abs(x) / seq.R(n + 1)
            rb = max(r, r_next)
            if rb < 1 and abs(t) * rb / (1 - rb) <= tol * abs(s):
                return s
        else:
            above += 1
            if above > 1000 or not math.isfinite(t):
                break
    raise NonConvergenceError(f"Exp_R series does not converge at x={x!r}")


def _mp_solutions(seq, w, N, dps):
    with mp.workdps(dps):
        w = mp.mpf(w)
        P = [mp.mpf(1), (w - seq.D_mp(0)) / mp.sqrt(seq.R_mp(1))]
        Q = [mp.mpf(0), 1 / mp.sqrt(seq.R_mp(1))]
        sr = [mp.mpf(0)] + [mp.sqrt(seq.R_mp(n)) for n in range(1, N + 2)]
        for n in range(1, N):
            Dn = seq.D_mp(n)
            P.append(((w - Dn) * P[n] - sr[n] * P[n - 1]) / sr[n + 1])
            Q.append(((w - Dn) * Q[n] - sr[n] * Q[n - 1]) / sr[n + 1])
        return P[: N + 1], Q[: N + 1], sr


def recurrence_solutions(seq: StructuralSeq, w: float, N: int, dps=None):
    """P_0..P_N and Q_0..Q_N at w.

    P_0 = 1, P_1 = (w - D(1))/sqrt(R(q)); Q_0 = 0, Q_1 = 1/sqrt(R(q)); both
    obey w X_n = sqrt(R(q^n)) X_{n-1} + D(q^n) X_n + sqrt(R(q^(n+1))) X_{n+1}.

    ``dps=None`` runs in floating point and returns float arrays.  An integer
    runs in mpmath at that many digits; ``"auto"`` picks the precision from
    the cancellation observed in the Casoratian and returns mpmath lists.
    """
    if N < 1:
        raise MathDomainError("N must be at least 1")
    if dps is None:
        sr = np.sqrt([seq.R(n) for n in range(1, N + 1)])
        if np.any(~(sr > 0)):
            raise MathDomainError("R must be positive")
        P = np.empty(N + 1)
        Q = np.empty(N + 1)
        P[0], P[1] = 1.0, (w - seq.D(0)) / sr[0]
        Q[0], Q[1] = 0.0, 1.0 / sr[0]
        for n in range(1, N):
            Dn = seq.D(n)
            P[n + 1] = ((w - Dn) * P[n] - sr[n - 1] * P[n - 1]) / sr[n]
            Q[n + 1] = ((w - Dn) * Q[n] - sr[n - 1] * Q[n - 1]) / sr[n]
        return P, Q
    P, Q, _ = _solutions_mp(seq, w, N, dps)
    return P, Q


def _solutions_mp(seq, w, N, dps):
    # returns P, Q and the precision they were computed at
    if dps != "auto":
        P, Q, _ = _mp_solutions(seq, w, N, int(dps))
        return P, Q, int(dps)
    dps = 30
    for _ in range(8):
        P, Q, sr = _mp_solutions(seq, w, N, dps)
        with mp.workdps(dps):
            worst = max((abs(P[k - 1] * Q[k]) + abs(P[k] * Q[k - 1])) * sr[k]
                        for k in range(1, N + 1))
            need = int(mp.ceil(mp.log10(worst))) + 30 if worst > 1 else 30
        if need <= dps:
            return P, Q, dps
        dps = need
    raise NonConvergenceError("could not settle the working precision")


def casoratian_errors(seq: StructuralSeq, w: float, N: int, dps="auto") -> np.ndarray:
    """Relative errors of P_{k-1}Q_k - P_kQ_{k-1} = R(q^k)^(-1/2), k = 1..N.

    The Casoratian is formed at the precision the solutions were computed in.
    """
    out = np.empty(N)
    if dps is None:
        P, Q = recurrence_solutions(seq, w, N)
        for k in range(1, N + 1):
            target = 1.0 / math.sqrt(seq.R(k))
            out[k - 1] = abs((P[k - 1] * Q[k] - P[k] * Q[k - 1]) - target) / target
        return out
    P, Q, prec = _solutions_mp(seq, w, N, dps)
    with mp.workdps(prec):
        for k in range(1, N + 1):
            target = 1 / mp.sqrt(seq.R_mp(k))
            out[k - 1] = float(abs((P[k - 1] * Q[k] - P[k] * Q[k - 1]) - target) / target)
    return out


def nevanlinna_partial(seq: StructuralSeq, w: float, N: int) -> NevanlinnaPartial:
    """Partial sums (k <= N) of the four Nevanlinna series at w."""
    P0, Q0 = recurrence_solutions(seq, 0.0, N)
    Pw, Qw = recurrence_solutions(seq, w, N)
    terms = np.stack([Q0 * Qw, Q0 * Pw, P0 * Qw, P0 * Pw])
    sums = w * terms.sum(axis=1)
    last = float(abs(w) * np.abs(terms[:, -1]).max())
    return NevanlinnaPartial(float(sums[0]), float(-1 + sums[1]), float(1 + sums[2]),
                             float(sums[3]), last)


def vacuum_amplitude(measure: DiscreteMeasure, t: float) -> complex:
    """sum_i mu_i exp(i omega_i t)."""
    if not measure.normalized:
        raise MathDomainError("amplitude needs a normalized measure")
    return complex(np.sum(measure.weights * np.exp(1j * measure.nodes * t)))


def amplitude_from_moments(mu: Sequence[float], t: float, nmax: int = 20) -> complex:
    """Truncated series sum_n (i t)^n mu_n / (n! mu_0)."""
    if len(mu) <= nmax:
        raise MathDomainError(f"need moments up to n={nmax}")
    s = 0j
    term = 1.0 + 0j
    for n in range(nmax + 1):
        if n:
            term *= 1j * t / n
        s += term * mu[n] / mu[0]
    return s


def spectral_measure(seq: StructuralSeq, M: int = 40) -> DiscreteMeasure:
    return spectrum(jacobi_matrix(seq, M))
