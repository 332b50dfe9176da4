"""Multimode boson models with a single cluster interaction.

A model is H = H0(A_0, ..., A_N) + A + A*, with the cluster operator
A = g0(n_0, ..., n_N) a_0^{k_0} ... a_N^{k_N} (a^{-k} meaning (a*)^k) and
A_i = sum_j alpha_ij a_j* a_j.  Fixing the eigenvalues lambda_1..lambda_N of
the integrals of motion leaves a weighted shift on each orbit, described by
the structural sequences R(q^n) and D(q^n).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce as _fold
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, ModelError, UnsupportedError
from .qcalc import check_q
from .qhahn import StructuralSeq

INT_TOL = 1e-9
MAX_STATES = 20000


@dataclass(frozen=True)
class MultibosonModel:
    k: tuple
    alpha: np.ndarray
    g0: Callable = field(default=lambda n: 1.0, compare=False)
    H0: Callable = field(default=lambda lam: 0.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(x) for x in self.k))
        a = np.array(self.alpha, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        object.__setattr__(self, "alpha", a)

    @property
    def N(self) -> int:
        return len(self.k) - 1

    @property
    def beta(self) -> np.ndarray:
        return np.linalg.inv(self.alpha)

    def lambdas_of(self, occ) -> np.ndarray:
        """Eigenvalues of A_0..A_N on a Fock state."""
        return self.alpha @ np.asarray(occ, dtype=float)

    def occupations_of(self, lam) -> np.ndarray:
        return self.beta @ np.asarray(lam, dtype=float)


@dataclass(frozen=True)
class ReducedSystem:
    lambdas: tuple
    l: int
    lambda0l: float
    kappa: int
    q: float
    seq: StructuralSeq
    vacuum: tuple
    k: tuple
    dim: Optional[int] = None

    @property
    def R_seq(self):
        return self.seq.R

    @property
    def D_seq(self):
        return self.seq.D

    def occupations(self, n: int) -> np.ndarray:
        """Fock state of the n-th level above the vacuum."""
        return np.asarray(self.vacuum) + n * np.asarray(self.k)

    def as_dict(self):
        return {"kappa": self.kappa, "l": self.l, "lambda0l": self.lambda0l,
                "lambdas": list(self.lambdas), "vacuum": list(self.vacuum),
                "dim": self.dim, "q": self.q}


# ---------------------------------------------------------------- validation

def validate_model(m: MultibosonModel) -> None:
    """Check det(alpha) != 0 and sum_j alpha_ij k_j = delta_i0."""
    k = np.asarray(m.k, dtype=float)
    a = m.alpha
    if a.shape != (len(k), len(k)):
        raise ModelError(f"alpha must be {len(k)}x{len(k)}, got {a.shape}")
    if not np.any(k):
        raise ModelError("k must be a nonzero vector")
    # relative determinant test against the row norms
    scale = np.prod(np.linalg.norm(a, axis=1))
    det = np.linalg.det(a)
    if scale == 0 or abs(det) <= 1e-12 * scale:
        raise ModelError("alpha is singular")
    row = a @ k
    target = np.zeros(len(k))
    target[0] = 1.0
    for i, (v, t) in enumerate(zip(row, target)):
        if abs(v - t) > 1e-12 * max(1.0, np.abs(a[i]).sum() * np.abs(k).max()):
            raise ModelError(f"constraint violated in row {i}: sum_j alpha[{i}][j] k_j = {v!r}, "
                             f"expected {t:g}")


def cluster_polynomial(k: int, n: int) -> float:
    """P_k(n) = <n| a^k a^{-k} |n>.

    k > 0: (n+1)...(n+k); k = 0: 1; k < 0: n(n-1)...(n+k+1), which is 0
    for 0 <= n < |k|.
    """
    k = int(k)
    if k == 0:
        return 1.0
    if k > 0:
        return float(math.prod(n + j for j in range(1, k + 1)))
    if 0 <= n < -k:
        return 0.0
    return float(math.prod(n - j for j in range(0, -k)))


def structural_G(m: MultibosonModel, occupations) -> float:
    """AA* diagonal |g0(n)|^2 prod_i P_{k_i}(n_i)."""
    occ = [int(x) for x in occupations]
    p = 1.0
    for ki, ni in zip(m.k, occ):
        p *= cluster_polynomial(ki, ni)
        if p == 0:
            return 0.0
    return abs(m.g0(occ)) ** 2 * p


def structural_G_shifted(m: MultibosonModel, occupations) -> float:
    """A*A diagonal: structural_G at n - k."""
    return structural_G(m, [n - k for n, k in zip(occupations, m.k)])


def dimension_class(m: MultibosonModel) -> str:
    ks = [x for x in m.k if x != 0]
    if any(x > 0 for x in ks) and any(x < 0 for x in ks):
        return "finite"
    return "infinite"


def is_vacuum(m: MultibosonModel, occ) -> bool:
    """A|n> = 0 for regular nonvanishing g0."""
    return any(k > 0 and 0 <= n < k for k, n in zip(m.k, occ))


def _kappa(k) -> int:
    return _fold(math.gcd, (abs(x) for x in k))


# ---------------------------------------------------------------- vacua

def _as_int(x) -> Optional[int]:
    r = round(float(x))
    return int(r) if abs(x - r) <= INT_TOL else None


def find_vacua(m: MultibosonModel, lambdas: Sequence[float]) -> List[tuple]:
    """All Fock vacua in the eigenspace of A_1..A_N with eigenvalues ``lambdas``.

    The eigenspace is the lattice line c + lambda_0 k (c = beta (0, lambdas));
    it is scanned over n_0 = 0, 1, ... up to the largest n_0 a vacuum can have.
    """
    k = np.asarray(m.k, dtype=float)
    if m.k[0] <= 0:
        raise UnsupportedError("vacuum parametrization needs k_0 > 0; "
                               "permute the modes so that mode 0 has k_0 > 0")
    if len(lambdas) != m.N:
        raise ConfigError(f"expected {m.N} eigenvalues, got {len(lambdas)}")
    c = m.beta @ np.concatenate([[0.0], np.asarray(lambdas, dtype=float)])
    # modes with k_i = 0 are frozen on the line
    for i in range(m.N + 1):
        if m.k[i] == 0:
            v = _as_int(c[i])
            if v is None or v < 0:
                return []
    # a vacuum has n_i < k_i for some i with k_i > 0: lambda_0 < (k_i - c_i)/k_i
    lam_max = max((m.k[i] - c[i]) / m.k[i] for i in range(m.N + 1) if m.k[i] > 0)
    n0_max = int(math.floor(c[0] + lam_max * m.k[0]))
    out = []
    for n0 in range(0, max(n0_max, -1) + 1):
        lam0 = (n0 - c[0]) / m.k[0]
        occ = c + lam0 * k
        ints = [_as_int(x) for x in occ]
        if any(v is None or v < 0 for v in ints):
            continue
        if is_vacuum(m, ints):
            out.append(tuple(ints))
    return out


def vacuum_lambdas(m: MultibosonModel, lambdas: Sequence[float]):
    """Return (kappa, L, {l: lambda_0l}).

    kappa is the gcd of |k_i|; each orbit in the eigenspace has one vacuum,
    labelled by its mode-0 occupation l, with
    lambda_0l = l/k_0 - (1/k_0) sum_{j>=1} beta_0j lambda_j.
    """
    validate_model(m)
    kappa = _kappa(m.k)
    vac = find_vacua(m, lambdas)
    beta = m.beta
    shift = float(np.dot(beta[0, 1:], np.asarray(lambdas, dtype=float)))
    lam = {v[0]: (v[0] - shift) / m.k[0] for v in vac}
    return kappa, sorted(lam), lam


def lambda0_formula(m: MultibosonModel, lambdas, l) -> float:
    beta = m.beta
    return (l - float(np.dot(beta[0, 1:], np.asarray(lambdas, dtype=float)))) / m.k[0]


# ---------------------------------------------------------------- reduction

def reduce(m: MultibosonModel, lambdas: Sequence[float], l: int, q: float,
           allow_finite: bool = False) -> ReducedSystem:
    """Reduce the model to the orbit of the vacuum with label ``l``.

    R(q^n) = G(n + lambda_0l - 1, lambdas) is the A*A diagonal on the n-th
    level, D(q^n) = H0(n + lambda_0l, lambdas).  Finite orbits are refused
    unless ``allow_finite``; then R vanishes from the top level on and
    ``dim`` is the orbit length.
    """
    q = check_q(q)
    validate_model(m)
    finite = dimension_class(m) == "finite"
    if finite and not allow_finite:
        raise UnsupportedError("finite-dimensional orbits are not reduced "
                               "(pass allow_finite=True for truncated use)")
    kappa, L, lam0 = vacuum_lambdas(m, lambdas)
    if l not in lam0:
        raise ModelError(f"label {l!r} is not a vacuum label; available: {L}")
    lambda0l = lam0[l]
    vac = next(v for v in find_vacua(m, lambdas) if v[0] == l)
    k = np.asarray(m.k)
    lam_rest = tuple(float(x) for x in lambdas)

    def level(n):
        # occupations from beta applied to (n + lambda_0l, lambdas)
        occ = m.occupations_of((n + lambda0l,) + lam_rest)
        ints = [_as_int(x) for x in occ]
        if any(v is None for v in ints):
            raise ModelError(f"level {n} is not a lattice point: {occ}")
        if list(ints) != list(np.asarray(vac) + n * k):
            raise ModelError(f"level {n} left the orbit line")
        return ints

    dim = None
    if finite:
        dim = 0
        while all(x >= 0 for x in np.asarray(vac) + dim * k):
            dim += 1

    def R(n):
        if dim is not None and n >= dim:
            return 0.0
        return structural_G_shifted(m, level(n))

    def D(n):
        return float(m.H0(np.array((n + lambda0l,) + lam_rest)))

    seq = StructuralSeq(R, D, "from_multiboson", q)
    if seq.R(0) != 0.0 or structural_G_shifted(m, level(0)) != 0.0:
        raise ModelError("vacuum condition R(1) = 0 fails")
    return ReducedSystem(lam_rest, l, float(lambda0l), kappa, q, seq, tuple(vac),
                         tuple(m.k), dim)


# ---------------------------------------------------------------- Fock oracle

@dataclass
class FockTruncation:
    cutoff: int
    states: np.ndarray
    a: list
    adag: list
    A: np.ndarray
    Adag: np.ndarray
    Ai: list
    index: Dict[tuple, int]

    def interior(self, k) -> np.ndarray:
        """Mask of states with n_i <= cutoff - 2|k_i| in every mode."""
        lim = np.array([self.cutoff - 2 * abs(x) for x in k])
        return np.all(self.states <= lim, axis=1)


def _mode_ops(cutoff: int):
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)
    return a, a.T.copy()


def fock_oracle(m: MultibosonModel, cutoff: int, max_states: int = MAX_STATES) -> FockTruncation:
    """Dense matrices of a_i, a_i*, A, A*, A_i on occupations 0..cutoff per mode."""
    kmax = max(abs(x) for x in m.k)
    if cutoff < max(3, 2 * kmax):
        raise ConfigError(f"cutoff must be at least {max(3, 2 * kmax)}")
    d = cutoff + 1
    nmodes = m.N + 1
    size = d ** nmodes
    if size > max_states:
        raise ConfigError(f"{size} states exceed the budget of {max_states}")
    a1, ad1 = _mode_ops(cutoff)
    eye = np.eye(d)

    def embed(op, i):
        mats = [op if j == i else eye for j in range(nmodes)]
        return _fold(np.kron, mats)

    a = [embed(a1, i) for i in range(nmodes)]
    adag = [x.T.copy() for x in a]
    states = np.array(list(itertools.product(range(d), repeat=nmodes)))
    cluster = np.eye(size)
    for i, ki in enumerate(m.k):
        op = a[i] if ki > 0 else adag[i]
        cluster = cluster @ np.linalg.matrix_power(op, abs(ki))
    g = np.array([m.g0(list(s)) for s in states], dtype=float)
    A = g[:, None] * cluster
    num = [np.diag(states[:, i].astype(float)) for i in range(nmodes)]
    Ai = [sum(m.alpha[i, j] * num[j] for j in range(nmodes)) for i in range(nmodes)]
    index = {tuple(s): n for n, s in enumerate(states)}
    return FockTruncation(cutoff, states, a, adag, A, A.T.copy(), Ai, index)


def commutator(X, Y):
    return X @ Y - Y @ X


def oracle_residuals(m: MultibosonModel, F: FockTruncation) -> Dict[str, float]:
    """Largest interior entries of [A_0,A]+A, [A,A_i], [A*,A_i] and [A_i,A_j]."""
    mask = F.interior(m.k)
    sub = lambda X: np.abs(X[np.ix_(mask, mask)]).max() if mask.any() else 0.0
    out = {"[A0,A]+A": sub(commutator(F.Ai[0], F.A) + F.A),
           "[A0,A*]-A*": sub(commutator(F.Ai[0], F.Adag) - F.Adag)}
    out["[A,Ai]"] = max([sub(commutator(F.A, X)) for X in F.Ai[1:]] + [0.0])
    out["[A*,Ai]"] = max([sub(commutator(F.Adag, X)) for X in F.Ai[1:]] + [0.0])
    out["[Ai,Aj]"] = max(sub(commutator(X, Y)) for X in F.Ai for Y in F.Ai)
    return out


def orbit_decomposition(m: MultibosonModel, F: FockTruncation):
    """Group truncated lattice points by the vacuum of their orbit.

    Each point is walked down by n -> n - k until it is annihilated by A;
    returns {lambda_1..N tuple: {vacuum: [points]}}.
    """
    k = np.asarray(m.k)
    out: Dict[tuple, Dict[tuple, list]] = {}
    for s in F.states:
        p = s.copy()
        steps = 0
        while not is_vacuum(m, p):
            p = p - k
            steps += 1
            if np.any(p < 0):
                raise ModelError("orbit walk left the lattice before reaching a vacuum")
        lam = tuple(np.round(m.lambdas_of(s)[1:], 9))
        out.setdefault(lam, {}).setdefault(tuple(int(x) for x in p), []).append(tuple(s))
    return out


def reduced_hamiltonian_oracle(m: MultibosonModel, F: FockTruncation, rs: ReducedSystem,
                               M: int) -> np.ndarray:
    """<level i| H0(A) + A + A* |level j> for the first M levels of the orbit."""
    H0diag = np.array([m.H0(m.lambdas_of(s)) for s in F.states])
    H = np.diag(H0diag) + F.A + F.Adag
    idx = [F.index[tuple(int(x) for x in rs.occupations(n))] for n in range(M)]
    return H[np.ix_(idx, idx)]
