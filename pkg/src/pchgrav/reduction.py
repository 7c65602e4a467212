"""Compatible-representative machinery for boundary connections.

Given a boundary coframe e and connection omega, the unique kernel-valued
correction v with

    e ^ v = 0,     [v, e] = -p_{(2,1)}(d_omega e)

produces the structural representative omega~ = omega + v satisfying
p d_omega~ e = 0.  The per-site solve goes through the isomorphism
phi_e = p_{(2,1)} o [.,e] restricted to ker W_e^{(1,2)}, assembled here in the
e-adapted frame where it is an explicit 6x6 matrix depending only on the
boundary metric.

The same frame algebra drives the kernel-intersection dimension counting
K = ker([.,e]) cap ker(W_e^{(1,2)}) at exactly constructed (possibly
degenerate) boundary metrics, and the exactness check of

    0 -> ker W^{(1,2)} --[.,e]--> Omega^2(V) --W^{(2,1)}--> Omega^3(L^2 V) -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exactla, fiber, wedgemaps
from .fiber import Signature
from .grid import Coframe, FormField, action_wedge, cov_deriv
from .wedgemaps import KERNEL_TEMPLATES, complete_frame, compound_matrix

SPATIAL_PAIRS = [(0, 1), (0, 2), (1, 2)]


# ---------------------------------------------------------------------------
# bracket-with-e matrices


def _bracket_matrix_tensor(sig: Signature) -> np.ndarray:
    """BT[cod, dom, b, j]: matrix of v -> [v, e] in u-coords, linear in e_b^j."""
    act = fiber._ACTION_CACHE[sig.eta_diag]  # act[I, j, k]
    BT = np.zeros((12, 18, 3, 4))
    for a in range(3):  # domain coordinate index of v
        for I in range(6):
            dom = a * 6 + I
            for d in range(3):  # coframe leg e_d
                if a == d:
                    continue
                pair = (a, d) if a < d else (d, a)
                s = 1 if a < d else -1
                co = SPATIAL_PAIRS.index(pair)
                for j in range(4):
                    for k in range(4):
                        if act[I, j, k]:
                            BT[co * 4 + k, dom, d, j] += s * act[I, j, k]
    return BT


_BRACKET_TENSORS = {sig.eta_diag: _bracket_matrix_tensor(sig) for sig in (fiber.EUCLIDEAN, fiber.LORENTZIAN)}


def bracket_matrix(e: np.ndarray, sig: Signature) -> np.ndarray:
    """Per-site matrix of [., e]: Omega^1(L^2 V) -> Omega^2(V), u-coords."""
    return np.einsum("CDbj,...bj->...CD", _BRACKET_TENSORS[sig.eta_diag], e)


def bracket_with_e(v: FormField, e: Coframe) -> FormField:
    """[v, e] as a field: bilinear, onto Omega^2(V) for nondegenerate g."""
    return action_wedge(v, e.field, e.sig)


def _frame_bracket_rows(g, one=1.0):
    """Matrix of v -> [v,e] in the e-frame as a function of the boundary metric.

    Domain: v[a, P] over all 6 frame pairs (18); codomain: spatial-pair by
    frame-vector components (12).  Only the spatial block of the frame Gram
    enters: act(e_m ^ e_n, e_d) = e_m G_{nd} - e_n G_{md} with G_{nd} = 0 for
    the orthogonal completion.
    """
    rows = [[0 * one for _ in range(18)] for _ in range(12)]

    def add(co, k, dom, val):
        rows[co * 4 + k][dom] += val

    for a in range(3):
        for Pi, (m, n) in enumerate(fiber.PAIRS):
            dom = a * 6 + Pi
            for d in range(3):
                if a == d:
                    continue
                pair = (a, d) if a < d else (d, a)
                s = 1 if a < d else -1
                co = SPATIAL_PAIRS.index(pair)
                # act(e_m ^ e_n, e_d) = e_m G_{nd} - e_n G_{md}
                if n < 3:
                    add(co, m, dom, s * g[n][d] if isinstance(g, list) else s * g[n, d])
                if m < 3:
                    add(co, n, dom, -s * g[m][d] if isinstance(g, list) else -s * g[m, d])
    return rows


def frame_bracket_matrix(g: np.ndarray) -> np.ndarray:
    """Batched e-frame bracket matrix from the boundary metric g (..., 3, 3)."""
    BT = _FRAME_BRACKET_TENSOR
    return np.einsum("CDcd,...cd->...CD", BT, g)


def _frame_bracket_tensor() -> np.ndarray:
    T = np.zeros((12, 18, 3, 3))
    for c in range(3):
        for d in range(3):
            g = np.zeros((3, 3))
            g[c, d] = 1.0
            T[..., c, d] = np.array(_frame_bracket_rows(g))
    return T


_FRAME_BRACKET_TENSOR = _frame_bracket_tensor()

K12HAT = KERNEL_TEMPLATES[(1, 2)]  # (18, 6) orthonormal
K21HAT = KERNEL_TEMPLATES[(2, 1)]  # (12, 6) orthonormal

#: phi(g) = K21^T B(g) K12, batched over g
_PHI_TENSOR = np.einsum("Dk,DEcd,El->klcd", K21HAT, _FRAME_BRACKET_TENSOR, K12HAT)


def phi_matrix(g: np.ndarray) -> np.ndarray:
    """phi_e in the orthonormal template bases, as a function of g (..., 3, 3)."""
    return np.einsum("klcd,...cd->...kl", _PHI_TENSOR, g)


class PhiSingularError(RuntimeError):
    pass


def phi_e(e: np.ndarray, sig: Signature, cond_limit: float = 1e8):
    """Per-site 6x6 matrix of phi_e and its condition number.

    Raises PhiSingularError when the matrix is numerically singular, which
    signals a degenerate boundary metric.
    """
    e = np.asarray(e, dtype=float)
    g = np.einsum("ai,i,bi->ab", e, sig.eta, e)
    phi = phi_matrix(g)
    sv = np.linalg.svd(phi, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > cond_limit:
        raise PhiSingularError("phi_e singular: boundary metric degenerate?")
    return phi, float(sv[0] / sv[-1])


# ---------------------------------------------------------------------------
# omega~


@dataclass
class OmegaTildeResult:
    v_tilde: FormField
    omega_tilde: FormField
    structural_residual: float
    solver_conditioning: float
    frames: np.ndarray       # (n,n,n,4,4)
    gmetric: np.ndarray      # (n,n,n,3,3)


def _to_frame_vec2(d: FormField, Pinv: np.ndarray) -> np.ndarray:
    """Vector-valued 2-form into e-frame coefficients, flattened to 12."""
    d_e = np.einsum("...mi,...ci->...cm", Pinv, d.data)
    return d_e.reshape(d_e.shape[:-2] + (12,))


def structural_projection_norm(e: Coframe, omega: FormField, frames=None) -> float:
    """sup norm of p(d_omega e) in the orthonormal kernel-template coordinates."""
    if frames is None:
        frames, _ = complete_frame(e.data, e.sig)
    Pinv = np.linalg.inv(frames)
    d = cov_deriv(e.field, omega, e.sig)
    z = _to_frame_vec2(d, Pinv) @ K21HAT
    return float(np.abs(z).max())


def omega_tilde(e: Coframe, omega: FormField) -> OmegaTildeResult:
    """Unique structural representative omega~ = omega + v~ with p d_omega~ e = 0.

    v~ is kernel-valued (e ^ v~ = 0) and gauge-invariant: shifting omega by any
    kernel-valued field leaves omega~ unchanged.
    """
    sig = e.sig
    frames, _ = complete_frame(e.data, sig)
    Pinv = np.linalg.inv(frames)
    g = e.gmetric
    phi = phi_matrix(g)
    sv = np.linalg.svd(phi, compute_uv=False)
    if np.any(sv[..., -1] <= 0) or np.any(sv[..., 0] / sv[..., -1] > 1e8):
        raise PhiSingularError("phi_e singular: boundary metric degenerate?")
    cond = float((sv[..., 0] / sv[..., -1]).max())

    d = cov_deriv(e.field, omega, sig)
    z = _to_frame_vec2(d, Pinv) @ K21HAT          # (..., 6)
    coeff = -np.linalg.solve(phi, z[..., None])[..., 0]
    v_e = coeff @ K12HAT.T                          # (..., 18)
    v_e = v_e.reshape(v_e.shape[:-1] + (3, 6))
    L2P = compound_matrix(frames, 2)
    v_u = np.einsum("...IJ,...aJ->...aI", L2P, v_e)
    v_field = FormField(e.grid, 1, 2, v_u)
    om_t = omega + v_field

    res = structural_projection_norm(e, om_t, frames)
    return OmegaTildeResult(v_field, om_t, res, cond, frames, g)


# ---------------------------------------------------------------------------
# kernel intersection at exact boundary metrics


def kernel_intersection_dim(gdiag) -> int:
    """dim( ker([.,e]) cap ker W_e^{(1,2)} ) for an exact diagonal boundary metric.

    Pure frame algebra over rationals: kernel elements carry only spatial-pair
    components v[a, (b,c)] subject to the trace conditions, and the bracket
    equations involve only the boundary metric.  Expected: twice the dimension
    of ker(g).
    """
    g = [[Fraction(0)] * 3 for _ in range(3)]
    for i, val in enumerate(gdiag):
        g[i][i] = Fraction(val)

    def vcomp(a, b, c):
        # coefficient index and sign of v_a^{bc} among the 9 spatial variables
        if b == c:
            return None, 0
        if b < c:
            return a * 3 + SPATIAL_PAIRS.index((b, c)), 1
        return a * 3 + SPATIAL_PAIRS.index((c, b)), -1

    rows = []
    # trace conditions sum_a v_a^{ab} = 0
    for b in range(3):
        row = [Fraction(0)] * 9
        for a in range(3):
            idx, s = vcomp(a, a, b)
            if idx is not None:
                row[idx] += s
        rows.append(row)
    # bracket equations [v,e]^b_{ad} = sum_c v_a^{bc} g_{cd} - v_d^{bc} g_{ca} = 0
    for b in range(3):
        for a in range(3):
            for d in range(a + 1, 3):
                row = [Fraction(0)] * 9
                for c in range(3):
                    idx, s = vcomp(a, b, c)
                    if idx is not None:
                        row[idx] += s * g[c][d]
                    idx, s = vcomp(d, b, c)
                    if idx is not None:
                        row[idx] -= s * g[c][a]
                rows.append(row)
    return 9 - exactla.rank(rows)


def kernel_intersection_dim_from_coframe(e_exact, sig: Signature) -> int:
    """Same count from an exactly given coframe: g = e eta e^T computed exactly."""
    eta = [Fraction(x) for x in sig.eta_diag]
    e = [[Fraction(x) for x in row] for row in e_exact]
    g = [
        [sum(e[a][i] * eta[i] * e[b][i] for i in range(4)) for b in range(3)]
        for a in range(3)
    ]
    gd = [[g[a][b] for b in range(3)] for a in range(3)]
    # reuse the diagonal-independent assembly by inlining the general metric
    def vcomp(a, b, c):
        if b == c:
            return None, 0
        if b < c:
            return a * 3 + SPATIAL_PAIRS.index((b, c)), 1
        return a * 3 + SPATIAL_PAIRS.index((c, b)), -1

    rows = []
    for b in range(3):
        row = [Fraction(0)] * 9
        for a in range(3):
            idx, s = vcomp(a, a, b)
            if idx is not None:
                row[idx] += s
        rows.append(row)
    for b in range(3):
        for a in range(3):
            for d in range(a + 1, 3):
                row = [Fraction(0)] * 9
                for c in range(3):
                    idx, s = vcomp(a, b, c)
                    if idx is not None:
                        row[idx] += s * gd[c][d]
                    idx, s = vcomp(d, b, c)
                    if idx is not None:
                        row[idx] -= s * gd[c][a]
                rows.append(row)
    return 9 - exactla.rank(rows)


def make_degenerate_coframe(signs, sig: Signature) -> np.ndarray:
    """Exact 3x4 coframe whose boundary metric is diag(signs), when attainable.

    Lorentzian eta supports diag(1,1,1), diag(1,1,-1) and diag(1,1,0) (one
    null direction); Euclidean eta only diag(1,1,1).  Any other request is
    rejected: the remaining signatures of the kernel lemma need an ambient
    metric with two minus signs.
    """
    signs = tuple(signs)
    basis = {
        (1, 1, 1): [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]],
        (1, 1, -1): [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
        (1, 1, 0): [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]],
    }
    if sig.s == 1:
        if signs == (1, 1, 1):
            return np.array(basis[signs], dtype=float)
        raise ValueError(f"unattainable signature {signs} under Euclidean eta")
    if signs in basis:
        e = np.array(basis[signs], dtype=float)
        g = np.einsum("ai,i,bi->ab", e, sig.eta, e)
        assert np.allclose(g, np.diag(signs))
        return e
    raise ValueError(f"unattainable signature {signs} under Lorentzian eta")


# ---------------------------------------------------------------------------
# exact sequence at a site


@dataclass
class ExactSequenceReport:
    dim_kernel_12: int
    dim_image_bracket: int
    dim_kernel_21: int
    rank_w21: int
    wedge_residual: float          # max |e ^ [v,e]| over kernel basis
    containment_residual: float    # im([.,e]|ker) inside ker W^{(2,1)}
    reverse_residual: float        # ker W^{(2,1)} inside im([.,e]|ker)

    @property
    def is_exact(self) -> bool:
        return (
            self.dim_image_bracket == self.dim_kernel_12 == self.dim_kernel_21
            and self.rank_w21 == 6
            and max(self.containment_residual, self.reverse_residual) < 1e-9
        )


def _orth(columns: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(columns)
    keep = np.abs(np.diag(r)) > 1e-10 * max(1.0, np.abs(r).max())
    return q[:, keep]


def exact_sequence_check(e: np.ndarray, sig: Signature) -> ExactSequenceReport:
    e = np.asarray(e, dtype=float)
    s12 = wedgemaps.kernel_basis(wedgemaps.build_wedge_matrix(e, (1, 2), sig))
    s21 = wedgemaps.kernel_basis(wedgemaps.build_wedge_matrix(e, (2, 1), sig))
    B = bracket_matrix(e, sig)
    img = B @ s12.kernel_basis                     # (12, 6)
    sv = np.linalg.svd(img, compute_uv=False)
    dim_img = int((sv > 1e-10 * sv[0]).sum())

    W21 = s21.sample.matrix
    sv21 = np.linalg.svd(W21, compute_uv=False)
    rank_w21 = int((sv21 > 1e-10 * sv21[0]).sum())

    wedge_res = float(np.abs(W21 @ img).max() / max(1.0, np.abs(img).max()))

    img_o = _orth(img)
    ker_o = _orth(s21.kernel_basis)
    Pker = ker_o @ ker_o.T
    Pimg = img_o @ img_o.T
    cont = float(np.linalg.norm(img_o - Pker @ img_o, ord=2))
    rev = float(np.linalg.norm(ker_o - Pimg @ ker_o, ord=2))

    return ExactSequenceReport(
        dim_kernel_12=s12.kernel_basis.shape[1],
        dim_image_bracket=dim_img,
        dim_kernel_21=s21.kernel_basis.shape[1],
        rank_w21=rank_w21,
        wedge_residual=wedge_res,
        containment_residual=cont,
        reverse_residual=rev,
    )


# ---------------------------------------------------------------------------
# exact-arithmetic spot data (integer template bases)


def integer_kernel_basis_12() -> list:
    """Integer basis of the (1,2)-kernel template, columns as length-18 lists."""
    eqs = exactla.from_numpy_int(wedgemaps.kernel_equations((1, 2)))
    return exactla.nullspace(eqs)


def integer_kernel_basis_21() -> list:
    eqs = exactla.from_numpy_int(wedgemaps.kernel_equations((2, 1)))
    return exactla.nullspace(eqs)


def phi_pairing_det_exact(gdiag) -> Fraction:
    """det of K21^T B(g) K12 with integer template bases, exact.

    Nonzero iff phi_e is an isomorphism at that boundary metric.
    """
    g = [[Fraction(0)] * 3 for _ in range(3)]
    for i, v in enumerate(gdiag):
        g[i][i] = Fraction(v)
    B = _frame_bracket_rows(g, one=Fraction(1))
    K12 = integer_kernel_basis_12()   # columns
    K21 = integer_kernel_basis_21()
    K12m = [[col[i] for col in K12] for i in range(18)]
    K21mT = [list(col) for col in K21]  # rows = basis vectors
    BK = exactla.matmul(B, K12m)
    M = exactla.matmul(K21mT, BK)
    return exactla.det(M)
