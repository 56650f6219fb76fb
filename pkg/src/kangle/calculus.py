"""Tensor calculus over jet fields.

Tensors of jets are represented as a single :class:`~kangle.jets.Jet` whose
leading axes are the tensor component axes, followed by the batch axis over
sample points, followed by the coefficient axis.  Contractions go through
:func:`kangle.jets.jet_einsum`; a covariant derivative lowers the truncation
order by one, and binary operations truncate to the smaller operand order.

Index conventions (``b`` = batch axis):

* metric ``g``            -> axes (i, j, b)
* inverse metric          -> axes (i, j, b)
* Christoffel ``gamma``   -> axes (k, i, j, b), Gamma^k_{ij}
* vector field ``V``      -> axes (i, b), components V^i
* 1-form ``s``            -> axes (i, b), components s_i
* 2-form ``w``            -> axes (i, j, b), antisymmetric
* (1,1) tensor ``T``      -> axes (k, j, b), components T^k_j
"""

from __future__ import annotations

import numpy as np

from .jets import Jet, jet_einsum

__all__ = [
    "jstack",
    "jtrace",
    "match_orders",
    "jet_matrix_inverse",
    "jet_logdet",
    "partials",
    "christoffel",
    "riemann_from_christoffel",
    "ricci_from_riemann",
    "cov_d_oneform",
    "cov_d_twoform",
    "cov_d_threeform",
    "cov_d_vector",
    "cov_d_11tensor",
    "divergence",
    "codiff_oneform",
    "codiff_twoform",
    "codiff_threeform",
    "exterior_d_oneform",
    "exterior_d_twoform",
    "hessian",
    "trace_hessian",
    "gradient_vector",
    "two_form_pairing",
    "two_form_raise",
]


def jstack(jets, axis=0):
    """Stack jets along a new leading component axis."""
    first = jets[0]
    coeffs = np.stack([j.coeffs for j in jets], axis=axis)
    return Jet(first.dim, first.order, coeffs)


def jtrace(A):
    """Trace over the two leading component axes."""
    return Jet(A.dim, A.order, np.einsum("ii...->...", A.coeffs))


def match_orders(*jets):
    order = min(j.order for j in jets)
    return tuple(j.truncated(order) for j in jets)


def _jes(spec, a, b):
    """jet_einsum on order-matched operands."""
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = match_orders(a, b)
    return jet_einsum(spec, a, b)


def jet_matrix_inverse(G):
    """Inverse of a jet matrix G[i, j, b] via a finite Neumann series.

    Exact in the truncated jet ring: with G = G0 + N (N has zero constant
    term), G^-1 = (sum_p (-G0^-1 N)^p) G0^-1, and the series terminates at
    the truncation order.
    """
    m = G.coeffs.shape[0]
    G0 = np.moveaxis(G.coeffs[..., 0], (0, 1), (-2, -1))        # (b, m, m)
    I0 = np.moveaxis(np.linalg.inv(G0), (-2, -1), (0, 1))       # (i, j, b)
    N = Jet(G.dim, G.order, G.coeffs.copy())
    N.coeffs[..., 0] = 0.0
    M = jet_einsum("ik...,kj...->ij...", -I0, N)
    total = Jet.constant(G.dim, G.order, np.zeros(M.shape))
    acc = M
    for _ in range(G.order):
        total = total + acc
        acc = _jes("ik...,kj...->ij...", M, acc)
    for i in range(m):
        total.coeffs[i, i, ..., 0] += 1.0
    return jet_einsum("ik...,kj...->ij...", total, I0)


def jet_logdet(G):
    """log det G as a jet: log det G0 plus the finite trace-log series."""
    G0 = np.moveaxis(G.coeffs[..., 0], (0, 1), (-2, -1))
    sign, logdet0 = np.linalg.slogdet(G0)
    if np.any(sign <= 0):
        raise np.linalg.LinAlgError("jet_logdet needs a positive determinant")
    I0 = np.moveaxis(np.linalg.inv(G0), (-2, -1), (0, 1))
    N = Jet(G.dim, G.order, G.coeffs.copy())
    N.coeffs[..., 0] = 0.0
    M = jet_einsum("ik...,kj...->ij...", I0, N)
    acc = M
    total = None
    for k in range(1, G.order + 1):
        term = jtrace(acc) * ((-1.0) ** (k + 1) / k)
        total = term if total is None else total + term
        if k < G.order:
            acc = _jes("ik...,kj...->ij...", M, acc)
    return total + logdet0


def partials(T):
    """Stack all partial derivatives as a new leading axis (order drops by 1)."""
    return jstack([T.derivative(v) for v in range(T.dim)], axis=0)


def christoffel(g, g_inv=None):
    """Christoffel symbols Gamma^k_{ij} (jets, one order below g)."""
    dg = partials(g)                      # dg[v, i, j, b] = d_v g_ij
    if g_inv is None:
        g_inv = jet_matrix_inverse(g)
    sym = Jet(dg.dim, dg.order,
              np.einsum("ilj...->lij...", dg.coeffs)
              + np.einsum("jli...->lij...", dg.coeffs)
              - dg.coeffs)                # sym[l, i, j] = d_i g_lj + d_j g_li - d_l g_ij
    return _jes("kl...,lij...->kij...", g_inv, sym) * 0.5


def riemann_from_christoffel(gamma, g):
    """Curvature R_{ijkl} = g(R(d_i, d_j) d_k, d_l) at the base points.

    Convention: R(X, Y)Z = nab_X nab_Y Z - nab_Y nab_X Z - nab_{[X,Y]} Z.
    Returns a plain array of shape (b, m, m, m, m).
    """
    dG = np.moveaxis(partials(gamma).value(), -1, 0)   # (b, v, l, j, k): d_v G^l_{jk}
    G0 = np.moveaxis(gamma.value(), -1, 0)             # (b, l, j, k)
    # R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}
    term = np.einsum("biljk->bijkl", dG)
    quad = np.einsum("blim,bmjk->bijkl", G0, G0)
    R_up = term - term.swapaxes(1, 2) + quad - quad.swapaxes(1, 2)
    g0 = np.moveaxis(g.value(), -1, 0)
    return np.einsum("bijkm,bml->bijkl", R_up, g0)


def ricci_from_riemann(R, g_inv0):
    """Ric(Y, Z) = sum_i R(e_i, Y, Z, e_i), computed as g^{il} R_{iYZl}."""
    return np.einsum("bil,biyzl->byz", g_inv0, R)


def cov_d_oneform(s, gamma):
    """(nabla s)[i, j, b] = d_i s_j - Gamma^k_{ij} s_k."""
    ds = partials(s)
    o = min(ds.order, gamma.order)
    return ds.truncated(o) - _jes("kij...,k...->ij...", gamma, s).truncated(o)


def cov_d_twoform(w, gamma):
    """(nabla w)[i, j, k, b] = d_i w_jk - G^l_{ij} w_lk - G^l_{ik} w_jl."""
    dw = partials(w)
    o = min(dw.order, gamma.order)
    t1 = _jes("lij...,lk...->ijk...", gamma, w)
    t2 = _jes("lik...,jl...->ijk...", gamma, w)
    return dw.truncated(o) - t1.truncated(o) - t2.truncated(o)


def cov_d_threeform(t, gamma):
    """Covariant derivative of a 3-index covariant tensor."""
    dt = partials(t)
    o = min(dt.order, gamma.order)
    c1 = _jes("pil...,pjk...->iljk...", gamma, t)
    c2 = _jes("pij...,lpk...->iljk...", gamma, t)
    c3 = _jes("pik...,ljp...->iljk...", gamma, t)
    return dt.truncated(o) - c1.truncated(o) - c2.truncated(o) \
        - c3.truncated(o)


def cov_d_vector(V, gamma):
    """(nabla V)[i, k, b] = d_i V^k + Gamma^k_{il} V^l."""
    dV = partials(V)
    o = min(dV.order, gamma.order)
    return dV.truncated(o) + _jes("kil...,l...->ik...", gamma, V).truncated(o)


def cov_d_11tensor(T, gamma):
    """(nabla T)[i, k, j, b] = d_i T^k_j + G^k_{il} T^l_j - G^l_{ij} T^k_l."""
    dT = partials(T)
    o = min(dT.order, gamma.order)
    plus = _jes("kil...,lj...->ikj...", gamma, T)
    minus = _jes("lij...,kl...->ikj...", gamma, T)
    return dT.truncated(o) + plus.truncated(o) - minus.truncated(o)


def divergence(V, gamma):
    """div V = trace of nabla V (a jet one order below V)."""
    return jtrace(cov_d_vector(V, gamma))


def codiff_twoform(w, g_inv, gamma, sign=1.0):
    """(delta w)_k = -g^{ij} (nabla_i w)_{jk}, times the calibrated sign."""
    nw = cov_d_twoform(w, gamma)
    return _jes("ij...,ijk...->k...", g_inv, nw) * (-sign)


def codiff_oneform(s, g_inv, gamma, sign=1.0):
    """delta s = -g^{ij} (nabla_i s)_j, times the calibrated sign."""
    ns = cov_d_oneform(s, gamma)
    return _jes("ij...,ij...->...", g_inv, ns) * (-sign)


def codiff_threeform(t, g_inv, gamma, sign=1.0):
    """(delta t)_{jk} = -g^{il} (nabla_i t)_{ljk}, times the calibrated sign."""
    nt = cov_d_threeform(t, gamma)
    return _jes("il...,iljk...->jk...", g_inv, nt) * (-sign)


def exterior_d_oneform(s):
    """(ds)[i, j, b] = d_i s_j - d_j s_i."""
    ds = partials(s)
    return Jet(ds.dim, ds.order, ds.coeffs - np.swapaxes(ds.coeffs, 0, 1))


def exterior_d_twoform(w):
    """(dw)[i, j, k, b] = d_i w_jk - d_j w_ik + d_k w_ij."""
    dw = partials(w).coeffs
    out = dw - np.einsum("jik...->ijk...", dw) + np.einsum("kij...->ijk...", dw)
    return Jet(w.dim, w.order - 1, out)


def hessian(f, gamma):
    """Hess f [i, j, b] = d_i d_j f - Gamma^k_{ij} d_k f."""
    df = partials(f)
    ddf = partials(df)
    o = min(ddf.order, gamma.order)
    return ddf.truncated(o) - _jes("kij...,k...->ij...", gamma, df).truncated(o)


def trace_hessian(f, g_inv, gamma):
    """g^{ij} Hess f_{ij} (the 'div grad' Laplacian, as a jet)."""
    H = hessian(f, gamma)
    return _jes("ij...,ij...->...", g_inv, H)


def gradient_vector(f, g_inv):
    """(grad f)^i = g^{ij} d_j f."""
    df = partials(f)
    return _jes("ij...,j...->i...", g_inv, df)


def two_form_raise(w, g_inv):
    """w^{ij} = g^{ik} g^{jl} w_{kl}."""
    up1 = _jes("ik...,kl...->il...", g_inv, w)
    return _jes("jl...,il...->ij...", g_inv, up1)


def two_form_pairing(a, b, g_inv):
    """<a, b> = (1/2) g^{ik} g^{jl} a_{ij} b_{kl}.

    The 1/2 makes ||e^1 ^ e^2||^2 = 1; the choice is pinned by the angle
    norm identity ||F*w||^2 = n cos^2(theta).
    """
    b_up = two_form_raise(b, g_inv)
    return _jes("ij...,ij...->...", a, b_up) * 0.5
