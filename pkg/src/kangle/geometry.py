"""Pointwise geometry of a parametric immersion, computed from jets.

The entry point is :func:`compute_snapshot`, which evaluates an immersion
on a batch of domain points and derives every invariant the identity suites
consume: induced metric, pulled-back form, Kahler angles, polar complex
structure, second fundamental form, mean curvature, tangential projection
of J applied to the mean curvature, curvature tensors, codifferentials,
Laplacians and the complex eigenframes.

Quantities that are only defined away from the Lagrangian locus (smallest
angle ~ 0) or away from complex points (largest angle ~ 1) are computed on
masked sub-batches; outside their mask the exported arrays hold NaN and the
corresponding mask records applicability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ambient as amb
from . import calculus as ca
from .dsl import eval_components
from .errors import (
    DegenerateAngleError,
    NotAnImmersionError,
    UsageError,
)
from .jets import Jet, jet_einsum, jet_seed_all, jet_unary

# classification codes and tolerances
GENERIC, LAGRANGIAN, COMPLEX, MIXED = 0, 1, 2, 3
CLASS_NAMES = {GENERIC: "generic", LAGRANGIAN: "Lagrangian",
               COMPLEX: "complex", MIXED: "mixed"}

TOL_LAGRANGIAN = 1e-6       # cos(theta) below this counts as a zero angle
TOL_COMPLEX = 1e-6          # 1 - cos(theta) below this counts as a complex angle
TOL_EQUAL = 1e-8            # gate on max |cos a - cos b|
NEAR_GATE_BUFFER = 1e-4     # keep-away band around the singular loci
PAIRING_TOL = 1e-7          # skew singular values must pair up this well

__all__ = [
    "Snapshot",
    "compute_snapshot",
    "snapshot_from_F",
    "scalar_laplacian",
    "induced_metric",
    "pullback_form",
    "kahler_angles",
    "signed_angle_n1",
    "polar_J_omega",
    "second_fundamental_form",
    "mean_curvature",
    "weitzenboeck_operator",
    "gauss_equation_residual",
]


def _to_batch_first(arr):
    """(comp..., B) -> (B, comp...) for value arrays taken from jets."""
    return np.moveaxis(arr, -1, 0)


@dataclass
class Snapshot:
    """All computed invariants at a batch of domain points.

    Value arrays are batch-first; jet fields keep the component-axes-first
    layout of :mod:`kangle.calculus`.  ``masks`` maps context names to
    boolean arrays over the batch.
    """

    n: int
    order: int
    points: np.ndarray
    rejected: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    jets: dict = field(default_factory=dict)
    masks: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["data"][name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def domain_dim(self):
        return 2 * self.n

    @property
    def ambient_dim(self):
        return 4 * self.n


def scalar_laplacian(f_jet, g_inv, gamma, sign=1.0):
    """Metric trace of the Hessian, times the calibrated sign constant."""
    return ca.trace_hessian(f_jet, g_inv, gamma) * sign


def induced_metric(dF, gN=None):
    """g_ij = g_N(dF d_i, dF d_j) as jets; dF has axes (A, i, b)."""
    if gN is None:
        return jet_einsum("Ai...,Aj...->ij...", dF, dF)
    step = ca._jes("AB...,Bj...->Aj...", gN, dF)
    return ca._jes("Ai...,Aj...->ij...", dF, step)


def pullback_form(dF, J, gN=None):
    """(F*w)_ij = g_N(J dF d_i, dF d_j); antisymmetrized against roundoff."""
    JdF = jet_einsum("AB,Bi...->Ai...", J, dF)
    w = induced_metric_cross(JdF, dF, gN)
    return Jet(w.dim, w.order, 0.5 * (w.coeffs - np.swapaxes(w.coeffs, 0, 1)))


def induced_metric_cross(a, b, gN=None):
    if gN is None:
        return jet_einsum("Ai...,Aj...->ij...", a, b)
    step = ca._jes("AB...,Bj...->Aj...", gN, b)
    return ca._jes("Ai...,Aj...->ij...", a, step)


def kahler_angles(g0, W0):
    """Angles, rank data and the orthonormal-frame form matrix.

    Returns (cos_angles desc (B, n), What (B, d, d), L (B, d, d), gap (B,)).
    """
    B, d = g0.shape[0], g0.shape[1]
    L = np.linalg.cholesky(g0)
    Linv_W = np.linalg.solve(L, W0)                    # L^-1 W
    What = np.swapaxes(np.linalg.solve(L, np.swapaxes(Linv_W, -1, -2)),
                       -1, -2)                         # L^-1 W L^-T
    What = 0.5 * (What - np.swapaxes(What, -1, -2))
    svals = np.linalg.svd(What, compute_uv=False)      # descending
    gap = np.max(np.abs(svals[:, 0::2] - svals[:, 1::2]), axis=-1)
    if np.any(gap > PAIRING_TOL * (1.0 + svals[:, 0])):
        worst = float(np.max(gap))
        raise DegenerateAngleError(
            f"skew singular values failed to pair (worst gap {worst:.3e})"
        )
    cos = 0.5 * (svals[:, 0::2] + svals[:, 1::2])
    cos = np.clip(cos, 0.0, 1.0 + 1e-10)
    return cos, What, L, gap


def polar_J_omega(What, L, tol=TOL_LAGRANGIAN):
    """Pointwise polar factor of (F*w)#: partial isometry, kernel = ker F*w.

    Returns the operator in coordinate components, (B, d, d).
    """
    U, S, Vt = np.linalg.svd(-What)
    keep = (S > tol).astype(float)
    Jhat = np.einsum("bik,bk,bkj->bij", U, keep, Vt)
    Lt_inv = np.linalg.inv(np.swapaxes(L, -1, -2))
    return np.einsum("bik,bkl,blj->bij", Lt_inv, Jhat, np.swapaxes(L, -1, -2)), Jhat


def signed_angle_n1(g0, W0):
    """cos(theta~) = F*w(e1, e2) for the oriented orthonormal frame (n=1)."""
    if W0.shape[-1] != 2:
        raise UsageError("signed angle is defined only for n=1")
    det = g0[:, 0, 0] * g0[:, 1, 1] - g0[:, 0, 1] ** 2
    return W0[:, 0, 1] / np.sqrt(det)


def second_fundamental_form(dF, gamma, gammaN_F=None):
    """sff[i, j, A] = d_i d_j F^A + Gamma^N(dF_i, dF_j)^A - dF^A_k Gamma^k_{ij}."""
    ddF = ca.partials(dF)                          # (i, A, j, b)
    ddF = Jet(ddF.dim, ddF.order, np.einsum("iAj...->ijA...", ddF.coeffs))
    corr = ca._jes("Ak...,kij...->ijA...", dF, gamma)
    out = ddF - corr
    if gammaN_F is not None:
        t = ca._jes("ABC...,Bi...->AiC...", gammaN_F, dF)
        t = ca._jes("AiC...,Cj...->ijA...", t, dF)
        out = out + t
    return out


def mean_curvature(sff, g_inv, n):
    """H = (1/2n) g^{ij} sff_ij, a normal-valued jet (A, b)."""
    return ca._jes("ij...,ijA...->A...", g_inv, sff) * (1.0 / (2 * n))


def weitzenboeck_operator(RM, g_inv0, alpha0):
    """Curvature term of the 2-form Weitzenbock formula, applied to alpha.

    (q alpha)_{xy} = g^{kl}[ (R(d_k, d_x) alpha)(d_l, d_y)
                           - (R(d_k, d_y) alpha)(d_l, d_x) ]
    with (R(U,V) alpha)(A,B) = -alpha(R(U,V)A, B) - alpha(A, R(U,V)B).
    """
    T = -np.einsum("bkl,bpq,bkxlq,bpy->bxy", g_inv0, g_inv0, RM, alpha0) \
        - np.einsum("bkl,bpq,bkxyq,blp->bxy", g_inv0, g_inv0, RM, alpha0)
    return T - np.swapaxes(T, -1, -2)


def gauss_equation_residual(snapshot):
    """Max relative defect of R^M vs ambient curvature + sff quadratics."""
    RM = snapshot.RM
    sff0 = snapshot.sff0                                    # (b, i, j, A)
    gN0 = snapshot.gN0
    dF0 = snapshot.dF0                                      # (b, A, i)
    spec = snapshot.ambient_spec
    if spec.is_flat:
        RN_pull = 0.0
    else:
        RN = amb.curvature_tensor_point(spec, snapshot.F0)
        RN_pull = np.einsum("bABCD,bAi,bBj,bCk,bDl->bijkl",
                            RN, dF0, dF0, dF0, dF0)
    quad = np.einsum("bilA,bAB,bjkB->bijkl", sff0, gN0, sff0)
    quad2 = np.einsum("bjlA,bAB,bikB->bijkl", sff0, gN0, sff0)
    rhs = RN_pull + quad - quad2
    # the 1e-9 floor guards intrinsically flat cases where both sides vanish
    scale = max(np.max(np.abs(RM)) + np.max(np.abs(rhs)), 1e-9)
    return np.max(np.abs(RM - rhs)) / scale


# ---------------------------------------------------------------------------
# ambient data along the immersion


def _ambient_along_F(spec, F, order_metric, order_gamma):
    """Metric and Christoffel jets of the ambient space, pulled along F.

    The metric is evaluated algebraically on the F-jets; the Christoffel
    symbols are computed from ambient-variable metric jets seeded at F(p)
    and composed with the F-jets (no closed-form connection is used).
    Returns (gN (A,B,b) jets, gammaN_F (A,B,C,b) jets or None).
    """
    if spec.is_flat:
        return None, None
    m = spec.real_dim
    if m > 8:
        raise UsageError(
            "space-form ambients are supported for n <= 2 "
            "(the jet engine carries at most 8 variables)"
        )
    gN = amb.ambient_metric(spec, F.truncated(order_metric))
    z0 = _to_batch_first(F.value())                       # (b, m)
    z_seeds = jet_seed_all(m, order_gamma + 1, z0)
    gN_amb = amb.ambient_metric(spec, ca.jstack(z_seeds))
    gammaN_amb = ca.christoffel(gN_amb)                   # (A, B, C, b) jets
    Fl = [F[A] for A in range(m)]
    gammaN_F = _compose_field(gammaN_amb, Fl, order_gamma)
    return gN, gammaN_F


def _compose_field(amb_jet, F_components, out_order):
    """Compose every component of an ambient-variable jet tensor with F.

    Shares the power products of (F - z0) across all tensor components.
    """
    from .jets import _tables, jet_power_products

    m = amb_jet.dim
    tab = _tables(m, amb_jet.order)
    exps = [a for a in tab.exponents if sum(a) <= out_order]
    offs = []
    for F in F_components:
        Ft = F.truncated(out_order)
        c = Ft.coeffs.copy()
        c[..., 0] = 0.0
        offs.append(Jet(Ft.dim, out_order, c))
    powers = jet_power_products(offs, exps)
    PW = np.stack([powers[b].coeffs for b in exps], axis=0)   # (E, b, K)
    sel = [tab.position[b] for b in exps]
    A = amb_jet.coeffs[..., sel]                              # (comp..., b, E)
    out = np.einsum("...be,ebk->...bk", A, PW)
    return Jet(offs[0].dim, out_order, out)


# ---------------------------------------------------------------------------
# complex eigenframes


def _complex_frame(What, L):
    """Orthonormal eigenframe pairs (X_a, Y_a) of F*w, in coordinates.

    Off the kernel Y_a = J_w X_a; kernel pairs are an arbitrary orthonormal
    basis of the kernel.  Returns (X, Y) with shape (b, n, d).
    """
    B, d = What.shape[0], What.shape[1]
    n = d // 2
    Mh = 1j * What
    evals, evecs = np.linalg.eigh(Mh)        # ascending; last n are +cos
    sel = np.arange(2 * n - 1, n - 1, -1)                # +cos, descending
    picked = evecs[:, :, sel]
    X = np.sqrt(2.0) * np.real(picked)                   # (b, d, n)
    Y = -np.sqrt(2.0) * np.imag(picked)
    lam = evals[:, sel]                                  # ~ cos desc
    ker = lam <= TOL_LAGRANGIAN
    if np.any(ker):
        for b in np.nonzero(np.any(ker, axis=1))[0]:
            cols = np.nonzero(ker[b])[0]
            raw = np.concatenate(
                [np.real(picked[b][:, cols]), np.imag(picked[b][:, cols])], axis=1
            )
            q, _ = np.linalg.qr(raw)
            keep = q[:, : 2 * len(cols)]
            X[b][:, cols] = keep[:, 0::2]
            Y[b][:, cols] = keep[:, 1::2]
    # back to coordinates: v = L^{-T} v_hat
    Lt = np.swapaxes(L, -1, -2)
    Xc = np.linalg.solve(Lt, X)
    Yc = np.linalg.solve(Lt, Y)
    return np.swapaxes(Xc, -1, -2), np.swapaxes(Yc, -1, -2)   # (b, n, d)


def _normal_frame(dF0, gN0):
    """g_N-orthonormal basis of the normal space by metric Gram-Schmidt.

    dF0: (b, A, i).  Returns nu with shape (b, d, A) (d normal vectors).
    """
    B, m, d = dF0.shape
    cands = [dF0[:, :, i] for i in range(d)] + \
        [np.broadcast_to(np.eye(m)[a], (B, m)) for a in range(m)]
    basis = []
    for v in cands:
        v = v.astype(float).copy()
        for w in basis:
            coef = np.einsum("bA,bAB,bB->b", v, gN0, w)
            v -= coef[:, None] * w
        nrm2 = np.einsum("bA,bAB,bB->b", v, gN0, v)
        ok = nrm2 > 1e-18
        if not np.any(ok):
            continue
        if not np.all(ok):
            # candidate degenerate at some points only: skip it entirely if
            # any point rejects it, later candidates will fill the gap there
            # (the identity completion guarantees termination)
            continue
        basis.append(v / np.sqrt(nrm2)[:, None])
        if len(basis) == 2 * d:
            break
    if len(basis) < 2 * d:
        # fall back to a per-point loop for awkward degeneracies
        nu = np.empty((B, d, m))
        for b in range(B):
            acc = []
            for v in [dF0[b, :, i] for i in range(d)] + list(np.eye(m)):
                v = v.copy()
                for w in acc:
                    v -= np.einsum("A,AB,B->", v, gN0[b], w) * w
                nrm2 = np.einsum("A,AB,B->", v, gN0[b], v)
                if nrm2 > 1e-18:
                    acc.append(v / np.sqrt(nrm2))
                if len(acc) == 2 * d:
                    break
            nu[b] = np.stack(acc[d:])
        return nu
    return np.stack(basis[d:], axis=1)                       # (b, d, A)


# ---------------------------------------------------------------------------
# the full pipeline


def compute_snapshot(spec, points, order=3, skip_invalid=True):
    """Evaluate the immersion and every derived invariant at ``points``.

    points: (B, 2n).  Points that fail the immersion check (or, for
    skip_invalid, the chart bound) are dropped and reported in
    ``snapshot.rejected`` rather than silently imputed.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rejected = []
    if not spec.ambient.is_flat and spec.ambient.rho < 0 and skip_invalid:
        from .ambient import CHART_BOUNDARY_TOL
        from .dsl import eval_components_floats
        vals = eval_components_floats(spec, points)
        margin = 1.0 + spec.ambient.rho * np.sum(vals**2, axis=-1)
        bad = np.nonzero(margin <= CHART_BOUNDARY_TOL)[0]
        if bad.size:
            rejected = [(int(b), "outside chart domain") for b in bad]
            points = points[margin > CHART_BOUNDARY_TOL]
    F = eval_components(spec, points, order=order)
    snap = snapshot_from_F(spec.n, spec.ambient, F, points, order,
                           skip_invalid=skip_invalid)
    snap.rejected = rejected + snap.rejected
    return snap


def snapshot_from_F(n, ambient_spec, F, points, order, skip_invalid=True):
    """Build a snapshot from already-evaluated F jets (axes (4n, B))."""
    d, m = 2 * n, 4 * n
    snap = Snapshot(n=n, order=order, points=points)
    snap.data["ambient_spec"] = ambient_spec
    JN = amb.ambient_J(ambient_spec)
    dF = ca.jstack(
        [ca.jstack([F[A].derivative(i) for i in range(d)], axis=0) for A in range(m)],
        axis=0,
    )
    gN, gammaN_F = _ambient_along_F(ambient_spec, F, order - 1, order - 2)
    g = induced_metric(dF, gN)
    g0 = _to_batch_first(g.value())

    # immersion check
    eig = np.linalg.eigvalsh(g0)
    good = eig[:, 0] > 1e-12 * np.maximum(eig[:, -1], 1.0)
    if not np.all(good):
        bad = np.nonzero(~good)[0]
        if not skip_invalid:
            raise NotAnImmersionError(
                f"dF rank-deficient at {len(bad)} point(s), e.g. {points[bad[0]]}"
            )
        snap.rejected = [(int(b), "not an immersion") for b in bad]
        keep = np.nonzero(good)[0]
        points = points[keep]
        F = F.take_batch(keep)
        dF = dF.take_batch(keep)
        g = g.take_batch(keep)
        g0 = g0[keep]
        if gN is not None:
            gN = gN.take_batch(keep)
            gammaN_F = gammaN_F.take_batch(keep)
        snap.points = points
    B = points.shape[0]
    if B == 0:
        raise NotAnImmersionError("no valid points left in the batch")

    F0 = _to_batch_first(F.value())
    dF0 = np.moveaxis(dF.value(), -1, 0)                     # (b, A, i)
    gN0 = (np.broadcast_to(np.eye(m), (B, m, m)) if gN is None
           else np.moveaxis(gN.value(), -1, 0))
    g_inv = ca.jet_matrix_inverse(g)
    g_inv0 = np.moveaxis(g_inv.value(), -1, 0)
    gamma = ca.christoffel(g, g_inv)
    sqrt_det_g = jet_unary(ca.jet_logdet(g) * 0.5, "exp")

    W = pullback_form(dF, JN, gN)                            # (i, j, b), order-1
    W0 = np.moveaxis(W.value(), -1, 0)
    cos_angles, What, L, pair_gap = kahler_angles(g0, W0)
    Jw0, Jw_hat = polar_J_omega(What, L)
    frame_X, frame_Y = _complex_frame(What, L)
    Z = 0.5 * (frame_X - 1j * frame_Y)                       # (b, n, d)

    minc, maxc = cos_angles[:, -1], cos_angles[:, 0]
    spread = maxc - minc
    equal_gate = spread <= TOL_EQUAL
    near_equal = (~equal_gate) & (spread <= 10 * TOL_EQUAL)
    rank = 2 * np.sum(cos_angles > TOL_LAGRANGIAN, axis=1)
    classification = np.full(B, GENERIC, dtype=int)
    is_lag = maxc < TOL_LAGRANGIAN
    is_cplx = minc > 1.0 - TOL_COMPLEX
    has_lag_dir = minc < TOL_LAGRANGIAN
    has_cplx_dir = maxc > 1.0 - TOL_COMPLEX
    classification[has_lag_dir | has_cplx_dir] = MIXED
    classification[is_lag] = LAGRANGIAN
    classification[is_cplx] = COMPLEX

    # second fundamental form, mean curvature, (JH)^T
    sff = second_fundamental_form(dF, gamma, gammaN_F)       # (i, j, A, b)
    sff0 = np.moveaxis(sff.value(), -1, 0)
    H = mean_curvature(sff, g_inv, n)                        # (A, b)
    H0 = _to_batch_first(H.value())
    JH = jet_einsum("AB,B...->A...", JN, H)
    if gN is None:
        JHb = ca._jes("A...,Ai...->i...", JH, dF)            # 1-form (i, b)
    else:
        lowered = ca._jes("AB...,A...->B...", gN, JH)
        JHb = ca._jes("B...,Bi...->i...", lowered, dF)
    JHtop = ca._jes("ij...,j...->i...", g_inv, JHb)          # vector (i, b)
    normH2 = np.einsum("bA,bAB,bB->b", H0, gN0, H0)

    # pointwise derivative data of H and (JH)^T
    dH0 = np.moveaxis(ca.partials(H).value(), -1, 0)         # (b, i, A)
    nablaH = dH0.copy()
    if gammaN_F is not None:
        gNF0 = np.moveaxis(gammaN_F.value(), -1, 0)          # (b, A, B, C)
        nablaH += np.einsum("bABC,bBi,bC->biA", gNF0, dF0, H0)
    proj_T = np.einsum("bAi,bij,bBj,bBC->bAC", dF0, g_inv0, dF0, gN0)
    proj_N = np.broadcast_to(np.eye(m), (B, m, m)) - proj_T
    nabla_perpH = np.einsum("bAC,biC->biA", proj_N, nablaH)
    nabla_JHtop = np.moveaxis(ca.cov_d_vector(JHtop, gamma).value(), -1, 0)
    d_JHb = np.moveaxis(ca.exterior_d_oneform(JHb).value(), -1, 0)
    div_JHtop = ca.divergence(JHtop, gamma).value()

    # curvature of M
    RM = ca.riemann_from_christoffel(gamma, g)
    RicM = ca.ricci_from_riemann(RM, g_inv0)
    sumRM = np.einsum("bijkl,bui,buk,bvj,bvl->b",
                      RM, Z, np.conj(Z), Z, np.conj(Z))
    snap.data["sumRM_imag"] = np.max(np.abs(np.imag(sumRM)))
    sumRM = np.real(sumRM)

    # form calculus on F*w
    norm_W2_jet = ca.two_form_pairing(W, W, g_inv)
    cos2 = norm_W2_jet * (1.0 / n)
    sin2 = 1.0 - cos2
    delta_W = ca.codiff_twoform(W, g_inv, gamma)             # standard sign
    delta_W0 = _to_batch_first(delta_W.value())
    norm_delta_W2 = np.einsum("bij,bi,bj->b", g_inv0, delta_W0, delta_W0)
    nabla_W = ca.cov_d_twoform(W, gamma)
    nW0 = np.moveaxis(nabla_W.value(), -1, 0)                # (b, i, j, k)
    norm_nabla_W2 = 0.5 * np.einsum(
        "bim,bjp,bkq,bijk,bmpq->b", g_inv0, g_inv0, g_inv0, nW0, nW0)
    dd_W0 = np.moveaxis(ca.exterior_d_oneform(delta_W).value(), -1, 0)
    dW3 = ca.exterior_d_twoform(W)
    dW3_0 = np.moveaxis(dW3.value(), -1, 0)
    delta_dW0 = np.moveaxis(
        ca.codiff_threeform(dW3, g_inv, gamma).value(), -1, 0)
    hodge_W0 = dd_W0 + delta_dW0
    hodge_pair = 0.5 * np.einsum("bim,bjp,bij,bmp->b",
                                 g_inv0, g_inv0, hodge_W0, W0)
    lap_norm_W2 = ca.trace_hessian(norm_W2_jet, g_inv, gamma).value()
    lap_cos2 = lap_norm_W2 / n
    qW = weitzenboeck_operator(RM, g_inv0, W0)
    S_pair = 0.5 * np.einsum("bim,bjp,bij,bmp->b", g_inv0, g_inv0, qW, W0)

    grad_cos2 = ca.gradient_vector(cos2, g_inv)              # vector (i, b)
    grad_cos2_0 = _to_batch_first(grad_cos2.value())
    norm_grad_cos2_sq = np.einsum("bij,bi,bj->b",
                                  np.moveaxis(g.value(), -1, 0), grad_cos2_0,
                                  grad_cos2_0)

    # (F*w)# and its (JH)^T image: defined everywhere
    W_sharp = ca._jes("ik...,jk...->ij...", g_inv, W)        # operator (i, j, b)
    V_wjh = ca._jes("ij...,j...->i...", W_sharp, JHtop)
    div_Wsharp_JHtop = ca.divergence(V_wjh, gamma).value()

    snap.jets.update(
        F=F, dF=dF, g=g, g_inv=g_inv, gamma=gamma, gN=gN, gammaN_F=gammaN_F,
        W=W, sff=sff, H=H, JHb=JHb, JHtop=JHtop, cos2=cos2, sin2=sin2,
        delta_W=delta_W, grad_cos2=grad_cos2, W_sharp=W_sharp,
        sqrt_det_g=sqrt_det_g, norm_W2=norm_W2_jet,
    )
    snap.data.update(
        F0=F0, dF0=dF0, g0=g0, g_inv0=g_inv0, gN0=gN0, JN=JN, W0=W0,
        What=What, chol_L=L, cos_angles=cos_angles, pair_gap=pair_gap,
        Jw0=Jw0, Jw_hat=Jw_hat, frame_X=frame_X, frame_Y=frame_Y, Z=Z,
        rank=rank, classification=classification, equal_gate=equal_gate,
        near_equal_warn=near_equal, sff0=sff0, H0=H0, normH2=normH2,
        nablaH=nablaH, nabla_perpH=nabla_perpH, nabla_JHtop=nabla_JHtop,
        d_JHb=d_JHb, div_JHtop=div_JHtop, RM=RM, RicM=RicM, sumRM=sumRM,
        cos2_0=cos2.value(), sin2_0=sin2.value(), delta_W0=delta_W0,
        norm_W2_0=norm_W2_jet.value(), norm_delta_W2=norm_delta_W2,
        norm_nabla_W2=norm_nabla_W2, hodge_W0=hodge_W0, hodge_pair=hodge_pair,
        dW3_0=dW3_0, lap_norm_W2=lap_norm_W2, lap_cos2=lap_cos2,
        S_pair=S_pair, grad_cos2_0=grad_cos2_0,
        norm_grad_cos2_sq=norm_grad_cos2_sq,
        div_Wsharp_JHtop=div_Wsharp_JHtop, proj_N=proj_N,
        JHtop0=_to_batch_first(JHtop.value()),
        JHb0=_to_batch_first(JHb.value()),
        sqrt_det_g0=sqrt_det_g.value(),
    )
    if n == 1:
        snap.data["cos_signed"] = signed_angle_n1(g0, W0)

    _normal_bundle(snap)
    _masked_fields(snap)
    return snap


def _normal_bundle(snap):
    """Normal frame, normal-bundle form, polar factor and the Phi/Xi maps."""
    gN0, dF0, JN = snap.gN0, snap.dF0, snap.JN
    nu = _normal_frame(dF0, gN0)                             # (b, a, A)
    Jnu = np.einsum("AB,baB->baA", JN, nu)
    w_perp = np.einsum("baA,bAB,bcB->bac", Jnu, gN0, nu)
    w_perp = 0.5 * (w_perp - np.swapaxes(w_perp, -1, -2))
    svals = np.linalg.svd(w_perp, compute_uv=False)
    normal_angles = np.clip(0.5 * (svals[:, 0::2] + svals[:, 1::2]), 0.0, None)
    U, S, Vt = np.linalg.svd(-w_perp)
    keep = (S > TOL_LAGRANGIAN).astype(float)
    J_perp = np.einsum("bik,bk,bkj->bij", U, keep, Vt)
    JdF = np.einsum("AB,bBi->bAi", JN, dF0)
    Phi_nu = np.einsum("bAi,bAB,baB->bai", JdF, gN0, nu)     # (b, a, i)
    rhs = np.einsum("baA,bAB,bBj->baj", Jnu, gN0, dF0)
    Xi = np.einsum("bjk,bak->baj", np.linalg.inv(snap.g0), rhs)
    snap.data.update(nu=nu, w_perp=w_perp, normal_angles=normal_angles,
                     J_perp=J_perp, Phi_nu=Phi_nu, Xi_nu=Xi)


def _masked_fields(snap):
    """Quantities defined only away from the singular loci, on sub-batches."""
    B = snap.size
    n, d = snap.n, snap.domain_dim
    cos = snap.cos_angles
    minc, maxc = cos[:, -1], cos[:, 0]
    offL = minc > NEAR_GATE_BUFFER
    offC = maxc < 1.0 - NEAR_GATE_BUFFER
    m_jw = snap.equal_gate & offL
    m_band = m_jw & offC
    m_sigma = snap.equal_gate & offC
    snap.masks.update(off_lagrangian=offL, off_complex=offC,
                      jw_field=m_jw, band=m_band, sigma=m_sigma,
                      equal=snap.equal_gate)

    def alloc(*shape):
        return np.full((B,) + shape, np.nan)

    snap.data.update(
        costheta=alloc(), kappa=alloc(), lap_kappa=alloc(),
        grad_costheta=alloc(d), norm_grad_costheta2=alloc(),
        norm_nabla_Jw2=alloc(), delta_Jw0=alloc(d),
        div_Jw_JHtop_over_sin2=alloc(), div_Jw_JHtop=alloc(),
        delta_W_sharp0=alloc(d),
        norm_grad_abs_sin2=alloc(), grad_log_sin2=alloc(d),
        grad_sin2_0=-snap.grad_cos2_0,
        sigma_jh0=alloc(d), dsigma_jh0=alloc(d, d), nabla_sigma_jh0=alloc(d, d),
        sigma_dw0=alloc(d), dsigma_dw0=alloc(d, d), nabla_sigma_dw0=alloc(d, d),
        sigma_trace0=alloc(d), sff11_norm2=alloc(),
    )

    idx_jw = np.nonzero(m_jw)[0]
    if idx_jw.size:
        sub = {k: snap.jets[k].take_batch(idx_jw)
               for k in ("g", "g_inv", "gamma", "cos2", "W_sharp",
                         "JHtop", "delta_W")}
        gi0s = snap.g_inv0[idx_jw]
        c_jet = jet_unary(sub["cos2"], "sqrt")
        snap.data["costheta"][idx_jw] = c_jet.value()
        grad_c = ca.gradient_vector(c_jet, sub["g_inv"])
        gc0 = _to_batch_first(grad_c.value())
        snap.data["grad_costheta"][idx_jw] = gc0
        g0s = snap.g0[idx_jw]
        snap.data["norm_grad_costheta2"][idx_jw] = np.einsum(
            "bij,bi,bj->b", g0s, gc0, gc0)
        # smooth polar factor as a jet field
        Jw_field = ca._jes("ij...,...->ij...", sub["W_sharp"],
                           c_jet.reciprocal())
        nJw = ca.cov_d_11tensor(Jw_field, sub["gamma"])      # (i, k, j, b)
        nJw0 = np.moveaxis(nJw.value(), -1, 0)               # (b, i, k, j)
        gs = np.moveaxis(sub["g"].value(), -1, 0)
        snap.data["norm_nabla_Jw2"][idx_jw] = np.einsum(
            "bim,bkl,bjp,bikj,bmlp->b", gi0s, gs, gi0s, nJw0, nJw0)
        snap.data["delta_Jw0"][idx_jw] = -np.einsum(
            "bij,bikj->bk", gi0s, nJw0)
        # delta (F*w)# as a vector: g^{ki} (delta W)_i
        snap.data["delta_W_sharp0"][idx_jw] = np.einsum(
            "bki,bi->bk", gi0s, _to_batch_first(sub["delta_W"].value()))
        # div(J_w (JH)^T)
        VJ = ca._jes("ij...,j...->i...", Jw_field, sub["JHtop"])
        snap.data["div_Jw_JHtop"][idx_jw] = ca.divergence(
            VJ, sub["gamma"]).value()
        # (1,1) part of the second fundamental form w.r.t. J_w
        sff0s = snap.sff0[idx_jw]
        Jw0s = snap.Jw0[idx_jw]
        sff_rot = np.einsum("bki,blj,bklA->bijA", Jw0s, Jw0s, sff0s)
        sff11 = 0.5 * (sff0s + sff_rot)
        gN0s = snap.gN0[idx_jw]
        snap.data["sff11_norm2"][idx_jw] = np.einsum(
            "bik,bjl,bijA,bAB,bklB->b", np.linalg.inv(g0s),
            np.linalg.inv(g0s), sff11, gN0s, sff11)

    idx_band = np.nonzero(snap.masks["band"])[0]
    if idx_band.size:
        g_inv_s = snap.jets["g_inv"].take_batch(idx_band)
        gamma_s = snap.jets["gamma"].take_batch(idx_band)
        cos2_s = snap.jets["cos2"].take_batch(idx_band)
        sin2_s = snap.jets["sin2"].take_batch(idx_band)
        c_jet = jet_unary(cos2_s, "sqrt")
        kap = jet_unary((1.0 + c_jet) / (1.0 - c_jet), "log") * float(n)
        snap.data["kappa"][idx_band] = kap.value()
        snap.data["lap_kappa"][idx_band] = ca.trace_hessian(
            kap, g_inv_s, gamma_s).value()
        abs_sin = jet_unary(sin2_s, "sqrt")
        gs0 = snap.g0[idx_band]
        gas = _to_batch_first(ca.gradient_vector(abs_sin, g_inv_s).value())
        snap.data["norm_grad_abs_sin2"][idx_band] = np.einsum(
            "bij,bi,bj->b", gs0, gas, gas)
        logs2 = jet_unary(sin2_s, "log")
        snap.data["grad_log_sin2"][idx_band] = _to_batch_first(
            ca.gradient_vector(logs2, g_inv_s).value())
        Ws_s = snap.jets["W_sharp"].take_batch(idx_band)
        JHtop_s = snap.jets["JHtop"].take_batch(idx_band)
        Jw_field_b = ca._jes("ij...,...->ij...", Ws_s, c_jet.reciprocal())
        VJs = ca._jes("ij...,j...->i...", Jw_field_b, JHtop_s)
        VJs = ca._jes("i...,...->i...", VJs, sin2_s.reciprocal())
        snap.data["div_Jw_JHtop_over_sin2"][idx_band] = ca.divergence(
            VJs, gamma_s).value()

    idx_sig = np.nonzero(m_sigma)[0]
    if idx_sig.size:
        gamma_s = snap.jets["gamma"].take_batch(idx_sig)
        sin2_s = snap.jets["sin2"].take_batch(idx_sig)
        JHb_s = snap.jets["JHb"].take_batch(idx_sig)
        dW_s = snap.jets["delta_W"].take_batch(idx_sig)
        inv_sin2 = sin2_s.reciprocal()
        # the two summands of sigma are kept apart so the calibrated
        # codifferential sign can be applied by the identity layer
        sig_jh = ca._jes("i...,...->i...", JHb_s * (2.0 * n), inv_sin2)
        sig_dw = ca._jes("i...,...->i...", dW_s, inv_sin2)
        for tag, sig in (("jh", sig_jh), ("dw", sig_dw)):
            snap.data[f"sigma_{tag}0"][idx_sig] = _to_batch_first(sig.value())
            snap.data[f"dsigma_{tag}0"][idx_sig] = np.moveaxis(
                ca.exterior_d_oneform(sig).value(), -1, 0)
            snap.data[f"nabla_sigma_{tag}0"][idx_sig] = np.moveaxis(
                ca.cov_d_oneform(sig, gamma_s).value(), -1, 0)
        # trace form: sigma(X) = -(1/sin^2) g^{ik} g_N(sff(i, X), J dF(k))
        sff0s = snap.sff0[idx_sig]
        gN0s = snap.gN0[idx_sig]
        JdF = np.einsum("AB,bBk->bAk", snap.JN, snap.dF0[idx_sig])
        tr = np.einsum("bik,bixA,bAB,bBk->bx",
                       np.linalg.inv(snap.g0[idx_sig]), sff0s, gN0s, JdF)
        snap.data["sigma_trace0"][idx_sig] = -tr / snap.sin2_0[idx_sig][:, None]
    return snap
