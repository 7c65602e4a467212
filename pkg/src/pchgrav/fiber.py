"""Pointwise exterior algebra of a 4-dimensional inner-product space (V, eta).

Everything here is exact structure-constant algebra: wedge products on
Lambda^k V, the internal Hodge star on bivectors, the so(eta) bracket and its
action on vectors, the volume pairing Tr, and the Barbero-Immirzi twist maps
T_gamma.  All operations broadcast over arbitrary leading axes, so whole grids
of fiber values can be processed in one call.

Conventions (fixed once, used everywhere):
  * basis u_1..u_4 of V, eta = diag(1,1,1,1) or diag(1,1,1,-1);
  * eps_{1234} = +1 and Tr(u_i ^ u_j ^ u_k ^ u_l) = eps_{ijkl};
  * bivector components are stored on the ordered pairs
    (12, 13, 14, 23, 24, 34), trivector components on the sorted triple that
    omits the flagged index;
  * the bracket on Lambda^2 V is the matrix commutator after lowering one
    index with eta:  [A,B]^{rs} = A^{rm} eta_{mn} B^{ns} - (A <-> B).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

# ---------------------------------------------------------------------------
# gradings and basis bookkeeping

GRADE_DIMS = {0: 1, 1: 4, 2: 6, 3: 4, 4: 1}

#: ordered basis index tuples for each grade (0-based vector indices)
GRADE_BASIS = {k: list(combinations(range(4), k)) for k in range(5)}

PAIRS = GRADE_BASIS[2]
PAIR_INDEX = {p: i for i, p in enumerate(PAIRS)}
TRIPLES = GRADE_BASIS[3]


def _merge_sign(a: tuple, b: tuple):
    """Sign of sorting the concatenation of two disjoint sorted tuples, or None."""
    if set(a) & set(b):
        return None, None
    merged = list(a + b)
    sign = 1
    for i in range(len(merged)):
        for j in range(i + 1, len(merged)):
            if merged[i] > merged[j]:
                sign = -sign
    return tuple(sorted(merged)), sign


def _wedge_tensor(k: int, m: int) -> np.ndarray:
    """Structure constants W[i, j, out] for Lambda^k x Lambda^m -> Lambda^{k+m}."""
    out_basis = {t: i for i, t in enumerate(GRADE_BASIS[k + m])}
    W = np.zeros((GRADE_DIMS[k], GRADE_DIMS[m], GRADE_DIMS[k + m]), dtype=np.int64)
    for i, a in enumerate(GRADE_BASIS[k]):
        for j, b in enumerate(GRADE_BASIS[m]):
            merged, sign = _merge_sign(a, b)
            if merged is not None:
                W[i, j, out_basis[merged]] = sign
    return W


WEDGE_TENSORS = {
    (k, m): _wedge_tensor(k, m) for k in range(5) for m in range(5) if k + m <= 4
}


def eps4(i: int, j: int, k: int, l: int) -> int:
    idx = (i, j, k, l)
    if len(set(idx)) < 4:
        return 0
    sign = 1
    lst = list(idx)
    for a in range(4):
        for b in range(a + 1, 4):
            if lst[a] > lst[b]:
                sign = -sign
    return sign


# ---------------------------------------------------------------------------
# signature


@dataclass(frozen=True)
class Signature:
    """Diagonal inner product on V; s is the sign of det(eta)."""

    eta_diag: tuple

    def __post_init__(self):
        if tuple(self.eta_diag) not in ((1, 1, 1, 1), (1, 1, 1, -1)):
            raise ValueError("eta_diag must be (1,1,1,1) or (1,1,1,-1)")

    @property
    def eta(self) -> np.ndarray:
        return np.array(self.eta_diag, dtype=float)

    @property
    def s(self) -> int:
        return int(np.prod(self.eta_diag))

    @property
    def name(self) -> str:
        return "euclidean" if self.s == 1 else "lorentzian"


EUCLIDEAN = Signature((1, 1, 1, 1))
LORENTZIAN = Signature((1, 1, 1, -1))


def signature_from_name(name: str) -> Signature:
    try:
        return {"euclidean": EUCLIDEAN, "lorentzian": LORENTZIAN}[name.lower()]
    except KeyError:
        raise ValueError(f"unknown signature {name!r}") from None


# ---------------------------------------------------------------------------
# graded elements (thin wrapper; the array functions below do the real work)


@dataclass(frozen=True)
class GradedElement:
    """An element of Lambda^k V with exact component storage."""

    grade: int
    comps: np.ndarray

    def __post_init__(self):
        if self.grade not in GRADE_DIMS:
            raise ValueError("grade must be 0..4")
        c = np.asarray(self.comps)
        if c.shape[-1] != GRADE_DIMS[self.grade]:
            raise ValueError(
                f"grade {self.grade} needs {GRADE_DIMS[self.grade]} components"
            )
        object.__setattr__(self, "comps", c)

    def wedge(self, other: "GradedElement") -> "GradedElement":
        return wedge(self, other)


def basis_vector(i: int, dtype=float) -> GradedElement:
    c = np.zeros(4, dtype=dtype)
    c[i] = 1
    return GradedElement(1, c)


def basis_bivector(i: int, j: int, dtype=float) -> GradedElement:
    c = np.zeros(6, dtype=dtype)
    if i < j:
        c[PAIR_INDEX[(i, j)]] = 1
    else:
        c[PAIR_INDEX[(j, i)]] = -1
    return GradedElement(2, c)


def wedge(x: GradedElement, y: GradedElement) -> GradedElement:
    """Exterior product; graded-anticommutative, errors above top grade."""
    if x.grade + y.grade > 4:
        raise ValueError("grade exceeds 4")
    return GradedElement(x.grade + y.grade, wedge_comps(x.grade, y.grade, x.comps, y.comps))


def wedge_comps(k: int, m: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Component-level wedge, broadcasting over leading axes."""
    if k + m > 4:
        raise ValueError("grade exceeds 4")
    W = WEDGE_TENSORS[(k, m)]
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype == object or b.dtype == object:
        # exact-rational path
        out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (W.shape[2],), dtype=object)
        out[...] = Fraction(0)
        ii, jj, kk = np.nonzero(W)
        for i, j, o in zip(ii, jj, kk):
            out[..., o] = out[..., o] + int(W[i, j, o]) * a[..., i] * b[..., j]
        return out
    return np.einsum("ijo,...i,...j->...o", W, a, b)


# ---------------------------------------------------------------------------
# Tr, Hodge star, bracket, action


def tr_quad(q: np.ndarray) -> np.ndarray:
    """Volume pairing on Lambda^4 V, normalised so Tr(u1^u2^u3^u4) = +1."""
    q = np.asarray(q)
    return q[..., 0]


def _star2_matrix_entries(eta_diag, exact: bool):
    """star(u_i^u_j) = 1/2 eps_{ijkl} eta^{km} eta^{ln} u_m^u_n (diagonal eta)."""
    one = Fraction(1) if exact else 1.0
    M = [[Fraction(0) if exact else 0.0 for _ in range(6)] for _ in range(6)]
    for I, (i, j) in enumerate(PAIRS):
        for k in range(4):
            for l in range(4):
                e = eps4(i, j, k, l)
                if e == 0:
                    continue
                coef = e * one / (2 * eta_diag[k] * eta_diag[l])
                if k < l:
                    M[PAIR_INDEX[(k, l)]][I] += coef
                else:
                    M[PAIR_INDEX[(l, k)]][I] -= coef
    return M


def star2_matrix(sig: Signature, exact: bool = False) -> np.ndarray:
    ent = _star2_matrix_entries(sig.eta_diag, exact)
    if exact:
        out = np.empty((6, 6), dtype=object)
        for i in range(6):
            for j in range(6):
                out[i, j] = ent[i][j]
        return out
    return np.array(ent, dtype=float)


_STAR_CACHE = {
    (sig.eta_diag, exact): star2_matrix(sig, exact)
    for sig in (EUCLIDEAN, LORENTZIAN)
    for exact in (False, True)
}


def hodge_star2(b: np.ndarray, sig: Signature) -> np.ndarray:
    """Internal Hodge star on bivector components; star o star = s * id."""
    b = np.asarray(b)
    S = _STAR_CACHE[(sig.eta_diag, b.dtype == object)]
    if b.dtype == object:
        return np.array([sum(S[i, j] * b[..., j] for j in range(6)) for i in range(6)]).T
    return b @ S.T


def _bracket_tensor(sig: Signature) -> np.ndarray:
    """C[I,J,K]: bracket of basis bivectors, [A,B]^{rs} = A^{rm} eta_{mn} B^{ns} - (A<->B)."""
    C = np.zeros((6, 6, 6), dtype=np.int64)
    eta = sig.eta_diag
    for I, (i, j) in enumerate(PAIRS):
        A = np.zeros((4, 4), dtype=np.int64)
        A[i, j], A[j, i] = 1, -1
        for J, (k, l) in enumerate(PAIRS):
            B = np.zeros((4, 4), dtype=np.int64)
            B[k, l], B[l, k] = 1, -1
            Aeta = A * np.array(eta)[None, :]
            Beta = B * np.array(eta)[None, :]
            Cm = Aeta @ B - Beta @ A
            for K, (m, n) in enumerate(PAIRS):
                C[I, J, K] = Cm[m, n]
    return C


_BRACKET_CACHE = {sig.eta_diag: _bracket_tensor(sig) for sig in (EUCLIDEAN, LORENTZIAN)}


def bracket2(a: np.ndarray, b: np.ndarray, sig: Signature) -> np.ndarray:
    """so(eta) bracket on bivector components (broadcasts over leading axes)."""
    C = _BRACKET_CACHE[sig.eta_diag]
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype == object or b.dtype == object:
        out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (6,), dtype=object)
        out[...] = Fraction(0)
        ii, jj, kk = np.nonzero(C)
        for i, j, k in zip(ii, jj, kk):
            out[..., k] = out[..., k] + int(C[i, j, k]) * a[..., i] * b[..., j]
        return out
    return np.einsum("ijk,...i,...j->...k", C, a, b)


def _action_tensor(sig: Signature) -> np.ndarray:
    """T[I,j,k]: (b_I . u_j)^k with (a.v)^i = a^{ij} eta_{jk} v^k."""
    T = np.zeros((6, 4, 4), dtype=np.int64)
    eta = sig.eta_diag
    for I, (i, j) in enumerate(PAIRS):
        A = np.zeros((4, 4), dtype=np.int64)
        A[i, j], A[j, i] = 1, -1
        for v in range(4):
            T[I, v, :] = A[:, v] * eta[v]
    return T


_ACTION_CACHE = {sig.eta_diag: _action_tensor(sig) for sig in (EUCLIDEAN, LORENTZIAN)}


def act_on_vector(a: np.ndarray, v: np.ndarray, sig: Signature) -> np.ndarray:
    """so(eta) module action of a bivector on a vector."""
    T = _ACTION_CACHE[sig.eta_diag]
    a = np.asarray(a)
    v = np.asarray(v)
    if a.dtype == object or v.dtype == object:
        out = np.zeros(np.broadcast_shapes(a.shape[:-1], v.shape[:-1]) + (4,), dtype=object)
        out[...] = Fraction(0)
        ii, jj, kk = np.nonzero(T)
        for i, j, k in zip(ii, jj, kk):
            out[..., k] = out[..., k] + int(T[i, j, k]) * a[..., i] * v[..., j]
        return out
    return np.einsum("ijk,...i,...j->...k", T, a, v)


def tr_gram2() -> np.ndarray:
    """Gram matrix G_IJ = Tr[b_I ^ b_J] of the Tr pairing on Lambda^2 V."""
    G = np.zeros((6, 6))
    for I, (i, j) in enumerate(PAIRS):
        for J, (k, l) in enumerate(PAIRS):
            G[I, J] = eps4(i, j, k, l)
    return G


TR_GRAM2 = tr_gram2()


# ---------------------------------------------------------------------------
# Barbero-Immirzi twist


def t_gamma(b: np.ndarray, gamma: float, sig: Signature) -> np.ndarray:
    """Holst twist T_gamma(b) = b + (1/gamma) star b; gamma = inf gives identity."""
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    b = np.asarray(b)
    if np.isinf(gamma):
        return b.copy()
    return b + hodge_star2(b, sig) / gamma


def t_gamma_endo_matrix(gamma: float, sig: Signature) -> np.ndarray:
    """Matrix of the endomorphism T_gamma on the ordered bivector basis."""
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    if np.isinf(gamma):
        return np.eye(6)
    return np.eye(6) + _STAR_CACHE[(sig.eta_diag, False)] / gamma


def t_gamma_matrix(gamma: float, sig: Signature):
    """Pairing matrix Ttilde_IJ = Tr[T_gamma(b_I) ^ b_J] and its determinant.

    For the Lorentzian signature det = -(1 + gamma^-2)^3.
    """
    T = t_gamma_endo_matrix(gamma, sig)
    pairing = T.T @ TR_GRAM2
    return pairing, float(np.linalg.det(pairing))


def f_alpha_matrix(alpha: float):
    """Twisted-basis map F_alpha = id + alpha * star (Lorentzian star pattern).

    det F_alpha = (1 + alpha^2)^3; F is singular exactly at alpha = +-i.
    """
    F = np.eye(6) + alpha * _STAR_CACHE[((1, 1, 1, -1), False)]
    return F, float(np.linalg.det(F))


def morphism_residual(gamma: float, sig: Signature, n_samples: int = 64, seed: int = 2024) -> float:
    """max over random pairs of ||[T A, T B] - 2 T[A,B]|| / (||A|| ||B||).

    Vanishes iff gamma^2 = s: real gamma can satisfy it only in the Euclidean
    signature.
    """
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    rng = np.random.Generator(np.random.Philox(key=seed))
    worst = 0.0
    for _ in range(n_samples):
        a = rng.normal(size=6)
        b = rng.normal(size=6)
        ta = t_gamma(a, gamma, sig)
        tb = t_gamma(b, gamma, sig)
        r = np.linalg.norm(bracket2(ta, tb, sig) - 2.0 * t_gamma(bracket2(a, b, sig), gamma, sig))
        worst = max(worst, r / (np.linalg.norm(a) * np.linalg.norm(b)))
    return worst


def frac_array(values) -> np.ndarray:
    """Object array of Fractions, for the exact-rational arithmetic mode."""
    arr = np.asarray(values)
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for idx in range(flat_in.size):
        flat_out[idx] = Fraction(flat_in[idx])
    return out
