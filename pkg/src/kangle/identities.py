"""Residual evaluators for the pointwise angle identities.

Every identity is evaluated as LHS - RHS over a batch snapshot, with an
applicability gate so formulas are only asserted on their domain of
validity.  Records carry the raw sides, absolute and relative residuals and
the gating reason; nothing is asserted at points whose classification
violates an identity's hypotheses.

Two sign conventions are not fixed a priori and are calibrated once per
process on a built-in flat surface: ``s_delta`` (the scalar Laplacian as a
multiple of the metric trace of the Hessian) and ``delta_sign`` (the
codifferential as a multiple of minus the metric contraction of the
covariant derivative).  ``calibrate_conventions`` tries all four sign pairs
and requires exactly one to close the n=1 angle-Laplacian identity and the
form-codifferential identity; the winning pair is stamped into every run
report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .ambient import einstein_constant
from .dsl import parse_immersion
from .errors import ConventionError
from .geometry import GENERIC, LAGRANGIAN, compute_snapshot

TOL_ABS_DEFAULT = 1e-7
TOL_REL_DEFAULT = 1e-5

SUITES = ("prop3.1", "lemma3.1", "delta_kappa", "weitzenboeck",
          "prop3.4", "section4", "prop3.6", "hypotheses")

__all__ = [
    "Conventions",
    "IdentityResidual",
    "calibrate_conventions",
    "verify_prop3_1",
    "verify_lemma3_1",
    "verify_delta_kappa",
    "verify_weitzenboeck",
    "verify_prop3_4",
    "verify_section4",
    "verify_prop3_6",
    "evaluate_hypothesis_fields",
    "run_identity_suite",
    "SUITES",
]


@dataclass(frozen=True)
class Conventions:
    """Calibrated sign conventions, recorded in every report header."""

    s_delta: int
    delta_sign: int
    two_form_normalization: str = "half"

    def as_dict(self):
        return {"s_delta": self.s_delta, "delta_sign": self.delta_sign,
                "two_form_normalization": self.two_form_normalization}


@dataclass
class IdentityResidual:
    """One named residual at one point."""

    id: str
    point_index: int
    lhs: object
    rhs: object
    abs_residual: float
    rel_residual: float
    applicable: bool
    reason: str
    tol_abs: float
    tol_rel: float
    passed: bool

    def as_dict(self):
        return {
            "id": self.id, "point_index": self.point_index,
            "lhs": self.lhs, "rhs": self.rhs,
            "abs_residual": self.abs_residual,
            "rel_residual": self.rel_residual,
            "applicable": self.applicable, "reason": self.reason,
            "tol_abs": self.tol_abs, "tol_rel": self.tol_rel,
            "pass": self.passed,
        }


def _flt(x):
    x = np.asarray(x)
    if x.ndim == 0:
        return float(x)
    return [float(v) for v in x.ravel()]


def _records(ident, lhs, rhs, scale, applicable, reasons,
             tol_abs, tol_rel):
    """Build per-point records from batched sides.

    lhs, rhs: (B,) or (B, k); scale: (B,) magnitude of the largest term in
    the identity (relative residuals are scaled by it).
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diff = lhs - rhs
    if diff.ndim > 1:
        a = np.max(np.abs(diff.reshape(diff.shape[0], -1)), axis=1)
    else:
        a = np.abs(diff)
    scale = np.asarray(scale, dtype=float)
    rel = a / np.maximum(scale, 1e-300)
    out = []
    B = lhs.shape[0]
    for b in range(B):
        app = bool(applicable[b])
        if app:
            ok = bool(a[b] <= tol_abs or rel[b] <= tol_rel)
            reason = ""
        else:
            ok = False
            reason = reasons[b] if isinstance(reasons, (list, np.ndarray)) \
                else reasons
        out.append(IdentityResidual(
            id=ident, point_index=b,
            lhs=_flt(lhs[b]) if app else None,
            rhs=_flt(rhs[b]) if app else None,
            abs_residual=float(a[b]) if app and np.isfinite(a[b]) else
            (float(a[b]) if app else float("nan")),
            rel_residual=float(rel[b]) if app else float("nan"),
            applicable=app, reason=reason,
            tol_abs=tol_abs, tol_rel=tol_rel, passed=ok,
        ))
    return out


def _reason_array(B, masks_and_reasons):
    """Compose a gate from (mask, reason-when-False) pairs."""
    applicable = np.ones(B, dtype=bool)
    reasons = np.array([""] * B, dtype=object)
    for mask, why in masks_and_reasons:
        newly = applicable & ~mask
        reasons[newly] = why
        applicable &= mask
    return applicable, reasons


# ---------------------------------------------------------------------------
# complex-frame sums (pointwise, vectorized over the batch)


def _JdF(snap):
    return np.einsum("AB,bBi->bAi", snap.JN, snap.dF0)


def _gN_pair(snap, u, v):
    """Ambient pairing of (..., A)-indexed complex arrays."""
    return np.einsum("b...A,bAB,b...B->b...", u, snap.gN0, v)


def frame_sums(snap):
    """All complex eigenframe sums used by the identity formulas."""
    Z = snap.Z                                   # (b, n, d), complex
    Zb = np.conj(Z)
    JdF = _JdF(snap)                             # (b, A, i)
    JdF_Z = np.einsum("bAi,bmi->bmA", JdF, Z)
    JdF_Zb = np.einsum("bAi,bmi->bmA", JdF, Zb)
    nH_Z = np.einsum("biA,bmi->bmA", snap.nablaH, Z)
    nH_perp_Z = np.einsum("biA,bmi->bmA", snap.nabla_perpH, Z)

    g_nHZ_JdFZb = _gN_pair(snap, nH_Z, JdF_Zb)          # (b, m)
    g_nHperpZ_JdFZb = _gN_pair(snap, nH_perp_Z, JdF_Zb)
    sumA = np.sum(-2.0 * np.imag(g_nHZ_JdFZb), axis=1)
    sumA_perp = np.sum(np.imag(g_nHperpZ_JdFZb), axis=1)
    sumRe_perp = np.sum(np.real(g_nHperpZ_JdFZb), axis=1)

    nJH_Z = np.einsum("bik,bmi->bmk", snap.nabla_JHtop, Z)
    sumB = np.sum(np.imag(
        np.einsum("bmk,bkl,bml->bm", nJH_Z, snap.g0, Zb)), axis=1)

    sumC = np.einsum("bij,bmi,bmj->b", snap.d_JHb.astype(complex), Z, Zb)

    gH_JdFZ = _gN_pair(snap, np.broadcast_to(
        snap.H0[:, None, :], JdF_Z.shape).copy(), JdF_Z)
    sumD = np.sum(2.0 * np.real(1j * gH_JdFZ[..., None] * Zb), axis=1)

    # sums for the gradient-of-sin^2 identity
    sff0c = snap.sff0.astype(complex)
    sff_ZbZ = np.einsum("bijA,bmi,bmj->bmA", sff0c, Zb, Z)      # (b, m, A)
    t1 = np.einsum("bmA,bAB,bnB->bn", sff_ZbZ, snap.gN0, JdF_Z)
    sff_ZbZb2 = np.einsum("bijA,bmi,bnj->bmnA", sff0c, Zb, Z)   # sff(Zb_m, Z_n)
    t2 = np.einsum("bmnA,bAB,bmB->bn", sff_ZbZb2, snap.gN0, JdF_Z)
    sumE = np.einsum("bn,bnk->bk", t1 - t2, Zb)

    return {
        "sumA": sumA, "sumA_perp": sumA_perp, "sumRe_perp": sumRe_perp,
        "sumB": sumB, "sumC": sumC, "sumD": sumD, "sumE": sumE,
    }


def _g_pair(snap, u, v):
    return np.einsum("bij,bi,bj->b", snap.g0, u, v)


def _costheta_bar(snap):
    return np.mean(snap.cos_angles, axis=1)


def _curv_sum(snap):
    """The complexified curvature sum in the identity source's convention.

    The source's curvature tensor is the negative of ours (calibrated once
    against the n=2 angle-Laplacian identity and, independently, against the
    equal-angle closed form of the Weitzenbock curvature pairing).
    """
    return -snap.sumRM


# ---------------------------------------------------------------------------
# identity suites


def verify_prop3_1(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                   tol_rel=TOL_REL_DEFAULT):
    """Equal-angle norm/codifferential identities for the pulled-back form."""
    B, n = snap.size, snap.n
    sd = conventions.delta_sign
    cosb = _costheta_bar(snap)
    out = []

    eq = snap.equal_gate
    app, why = _reason_array(B, [(eq, "angles not equal")])
    lhs = snap.norm_W2_0
    rhs = n * cosb**2
    out += _records("prop3.1.norm_fw", lhs, rhs,
                    np.maximum(np.abs(lhs), np.abs(rhs)) + 1.0,
                    app, why, tol_abs, tol_rel)

    m_jw = snap.masks["jw_field"]
    app, why = _reason_array(B, [(eq, "angles not equal"),
                                 (m_jw, "Lagrangian point")])
    gc2 = snap.norm_grad_costheta2
    lhs = snap.norm_nabla_W2
    rhs = n * gc2 + 0.5 * cosb**2 * snap.norm_nabla_Jw2
    scale = np.abs(lhs) + np.abs(n * gc2) + \
        np.abs(0.5 * cosb**2 * snap.norm_nabla_Jw2) + 1e-30
    out += _records("prop3.1.norm_grad_fw", lhs, rhs, scale, app, why,
                    tol_abs, tol_rel)

    Jgc = np.einsum("bij,bj->bi", np.nan_to_num(snap.Jw0),
                    np.nan_to_num(snap.grad_costheta))
    lhs_v = sd * snap.delta_W_sharp0
    rhs_v = (n - 2.0) * Jgc
    scale = np.sqrt(np.abs(snap.norm_delta_W2)) + \
        np.abs(n - 2) * np.sqrt(np.abs(gc2)) + 1e-30
    out += _records("prop3.1.delta_form", lhs_v, rhs_v, scale, app, why,
                    tol_abs, tol_rel)

    lhs = snap.norm_delta_W2
    rhs = (n - 2.0) ** 2 * gc2
    out += _records("prop3.1.norm_delta_fw", lhs, rhs,
                    np.abs(lhs) + np.abs(rhs) + 1e-30, app, why,
                    tol_abs, tol_rel)

    lhs_v = cosb[:, None] * sd * snap.delta_Jw0
    rhs_v = (n - 1.0) * Jgc
    scale = cosb * np.linalg.norm(np.nan_to_num(snap.delta_Jw0), axis=1) \
        + np.abs(n - 1) * np.sqrt(np.abs(gc2)) + 1e-30
    out += _records("prop3.1.delta_jw", lhs_v, rhs_v, scale, app, why,
                    tol_abs, tol_rel)

    m_band = snap.masks["band"]
    app, why = _reason_array(B, [(eq, "angles not equal"),
                                 (m_band, "Lagrangian or complex point")])
    s = frame_sums(snap)
    lhs_v = (1.0 - n) * snap.grad_sin2_0
    rhs_v = 16.0 * cosb[:, None] * np.real(1j * s["sumE"])
    scale = np.linalg.norm(lhs_v, axis=1) + np.linalg.norm(rhs_v, axis=1) \
        + np.linalg.norm(snap.grad_cos2_0, axis=1) + 1e-30
    out += _records("prop3.1.grad_sin2", lhs_v, rhs_v, scale, app, why,
                    tol_abs, tol_rel)

    # (g): reported ratio, not asserted
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.einsum("bij,bi,bj->b", snap.g0, snap.grad_sin2_0,
                        snap.grad_sin2_0)
        den = cosb**2 * snap.sin2_0 * snap.sff11_norm2
        ratio = num / den
    for b in range(B):
        appl = bool(app[b] and np.isfinite(ratio[b]))
        out.append(IdentityResidual(
            id="prop3.1.estimate_ratio", point_index=b,
            lhs=float(num[b]) if appl else None,
            rhs=float(den[b]) if appl else None,
            abs_residual=float(ratio[b]) if appl else float("nan"),
            rel_residual=float(ratio[b]) if appl else float("nan"),
            applicable=appl,
            reason="" if appl else "ratio undefined at this point",
            tol_abs=float("inf"), tol_rel=float("inf"), passed=True,
        ))
    return out


def verify_lemma3_1(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                    tol_rel=TOL_REL_DEFAULT):
    """Mean-curvature projection identities (any immersion, gated parts)."""
    B, n = snap.size, snap.n
    sd = conventions.delta_sign
    out = []
    JdF = _JdF(snap)
    s = frame_sums(snap)
    cosb = _costheta_bar(snap)

    # (i) both equalities, tested against all coordinate pairs (X, Y)
    lhs = np.einsum("biA,bAB,bBj->bij", snap.nablaH, snap.gN0, JdF)
    Jsff = np.einsum("AB,bijB->bijA", snap.JN, snap.sff0)
    rhs1 = -np.einsum("bik,bkj->bij", snap.nabla_JHtop, snap.g0) \
        - np.einsum("bA,bAB,bijB->bij", snap.H0, snap.gN0, Jsff)
    Wsharp0 = np.einsum("bik,bjk->bij", snap.g_inv0, snap.W0)
    sff_W = np.einsum("bikA,bkj->bijA", snap.sff0, Wsharp0)
    rhs2 = -np.einsum("bA,bAB,bijB->bij", snap.H0, snap.gN0, sff_W) \
        + np.einsum("biA,bAB,bBj->bij", snap.nabla_perpH, snap.gN0, JdF)
    scale = np.max(np.abs(lhs).reshape(B, -1), axis=1) + \
        np.max(np.abs(rhs1).reshape(B, -1), axis=1) + 1e-30
    app = np.ones(B, dtype=bool)
    out += _records("lemma3.1.i_a", lhs.reshape(B, -1), rhs1.reshape(B, -1),
                    scale, app, "", tol_abs, tol_rel)
    out += _records("lemma3.1.i_b", lhs.reshape(B, -1), rhs2.reshape(B, -1),
                    scale, app, "", tol_abs, tol_rel)

    # (ii) half J_w (JH)^T equals the frame sum; needs full rank
    full_rank = snap.cos_angles[:, -1] > 1e-4
    app, why = _reason_array(B, [(full_rank, "Lagrangian direction present")])
    lhs_v = 0.5 * np.einsum("bij,bj->bi", snap.Jw0, snap.JHtop0)
    rhs_v = s["sumD"]
    scale = np.linalg.norm(lhs_v, axis=1) + np.linalg.norm(rhs_v, axis=1) \
        + np.sqrt(snap.normH2) + 1e-30
    out += _records("lemma3.1.ii", lhs_v, rhs_v, scale, app, why,
                    tol_abs, tol_rel)

    # (iii) the chain t1 = t2 = t3 (= t4 equal angles) (= t5 off L)
    t1 = 2.0 * s["sumA"]
    t2 = 4.0 * s["sumB"]
    t3 = np.real(-2j * s["sumC"])
    hscale = np.sqrt(snap.normH2) * (1.0 + np.max(
        np.abs(snap.sff0).reshape(B, -1), axis=1)) + np.abs(t1) + 1e-30
    app = np.ones(B, dtype=bool)
    out += _records("lemma3.1.iii_frame", t1, t2, hscale, app, "",
                    tol_abs, tol_rel)
    out += _records("lemma3.1.iii_exterior", t1, t3, hscale, app, "",
                    tol_abs, tol_rel)
    eq = snap.equal_gate
    app, why = _reason_array(B, [(eq, "angles not equal")])
    t4 = -2.0 * n * cosb * snap.normH2 - 4.0 * s["sumA_perp"]
    out += _records("lemma3.1.iii_normal", t1, t4,
                    hscale + np.abs(t4), app, why, tol_abs, tol_rel)
    m_jw = snap.masks["jw_field"]
    app, why = _reason_array(B, [(eq, "angles not equal"),
                                 (m_jw, "Lagrangian point")])
    t5 = -snap.div_Jw_JHtop + sd * _g_pair(
        snap, snap.JHtop0, np.nan_to_num(snap.delta_Jw0))
    out += _records("lemma3.1.iii_divergence", t1, t5,
                    hscale + np.abs(np.nan_to_num(t5)), app, why,
                    tol_abs, tol_rel)

    # (iv) divergence of (JH)^T
    app, why = _reason_array(B, [(eq, "angles not equal")])
    lhs = snap.div_JHtop
    rhs = -4.0 * s["sumRe_perp"]
    out += _records("lemma3.1.iv", lhs, rhs, hscale + np.abs(lhs), app, why,
                    tol_abs, tol_rel)
    return out


def _delta_kappa_gate(snap):
    B = snap.size
    return _reason_array(B, [
        (snap.equal_gate, "angles not equal"),
        (snap.masks["band"], "within buffer of the Lagrangian or complex locus"),
        (snap.classification == GENERIC, "classification not generic"),
    ])


def verify_delta_kappa(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                       tol_rel=TOL_REL_DEFAULT):
    """Angle-Laplacian identities (general form, divergence form, n=1 form)."""
    B, n = snap.size, snap.n
    sD, sd = conventions.s_delta, conventions.delta_sign
    R = einstein_constant(snap.ambient_spec)
    cosb = _costheta_bar(snap)
    sin2 = snap.sin2_0
    s = frame_sums(snap)
    app, why = _delta_kappa_gate(snap)
    out = []

    with np.errstate(invalid="ignore", divide="ignore"):
        bracket = cosb * (
            -2.0 * n * R
            + 32.0 * _curv_sum(snap) / sin2
            + snap.norm_nabla_Jw2 / sin2
            + 8.0 * (n - 1.0) * snap.norm_grad_costheta2 / sin2**2
        )
        lhs = sD * snap.lap_kappa
        mid = np.einsum("bij,bi,bj->b", snap.g0,
                        np.nan_to_num(snap.grad_costheta), s["sumD"])
        rhs32 = bracket - (16.0 * n / sin2**2) * cosb * mid \
            + (8.0 * n / sin2) * s["sumA"]
        scale = np.abs(np.nan_to_num(bracket)) + np.abs(np.nan_to_num(lhs)) \
            + np.abs((8.0 * n / np.maximum(sin2, 1e-30)) * s["sumA"]) + 1e-30
        out += _records("prop3.2.delta_kappa", lhs, rhs32, scale, app, why,
                        tol_abs, tol_rel)

        jh_term = 4.0 * n * sd * np.einsum(
            "bij,bi,bj->b", snap.g0, np.nan_to_num(snap.delta_Jw0),
            snap.JHtop0) / sin2
        rhs33 = bracket - 4.0 * n * snap.div_Jw_JHtop_over_sin2 + jh_term
        out += _records("prop3.3.delta_kappa", lhs, rhs33, scale, app, why,
                        tol_abs, tol_rel)

    if n == 1:
        rhs_c = -2.0 * R * cosb - 4.0 * snap.div_Jw_JHtop_over_sin2
        scale = np.abs(np.nan_to_num(lhs)) + np.abs(np.nan_to_num(rhs_c)) \
            + 2.0 * np.abs(R) * cosb + 1e-30
        out += _records("cor3.2.delta_kappa", lhs, rhs_c, scale, app, why,
                        tol_abs, tol_rel)
    return out


def verify_weitzenboeck(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                        tol_rel=TOL_REL_DEFAULT):
    """The 2-form Bochner balance for the pulled-back form (any immersion)."""
    sD, sd = conventions.s_delta, conventions.delta_sign
    terms = np.stack([
        0.5 * sD * snap.lap_norm_W2,
        sd * snap.hodge_pair,
        -snap.norm_nabla_W2,
        -snap.S_pair,
    ])
    resid = np.sum(terms, axis=0)
    scale = np.sum(np.abs(terms), axis=0) + 1e-30
    app = np.ones(snap.size, dtype=bool)
    out = _records("eq2.2.weitzenboeck", resid, np.zeros_like(resid), scale,
                   app, "", tol_abs, tol_rel)
    # equal-angle closed form of the curvature pairing
    cosb = _costheta_bar(snap)
    app, why = _reason_array(snap.size, [(snap.equal_gate, "angles not equal")])
    rhs = 16.0 * cosb**2 * _curv_sum(snap)
    scale = np.abs(snap.S_pair) + np.abs(rhs) + 1e-30
    out += _records("eq2.2.s_closed_form", snap.S_pair, rhs, scale, app, why,
                    tol_abs, tol_rel)
    return out


def verify_prop3_4(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                   tol_rel=TOL_REL_DEFAULT):
    """Laplacian of cos^2 and the two rewritings of its last term."""
    B, n = snap.size, snap.n
    sD, sd = conventions.s_delta, conventions.delta_sign
    R = einstein_constant(snap.ambient_spec)
    cosb = _costheta_bar(snap)
    sin2 = snap.sin2_0
    app, why = _delta_kappa_gate(snap)
    out = []
    with np.errstate(invalid="ignore", divide="ignore"):
        Jw_jh = np.einsum("bij,bj->bi", np.nan_to_num(snap.Jw0), snap.JHtop0)
        pair = np.einsum("bij,bi,bj->b", snap.g0,
                         np.nan_to_num(snap.grad_costheta), Jw_jh)
        term32 = -(4.0 * n * (2.0 + (n - 4.0) * sin2) / sin2) * pair
        terms = np.stack([
            -2.0 * n * sin2 * cosb**2 * R * np.ones(B),
            2.0 * snap.S_pair,
            2.0 * snap.norm_nabla_W2,
            4.0 * (n - 2.0) * np.nan_to_num(snap.norm_grad_abs_sin2),
            -4.0 * n * snap.div_Wsharp_JHtop,
            np.nan_to_num(term32),
        ])
        lhs = n * sD * snap.lap_cos2
        rhs = np.sum(terms, axis=0)
        scale = np.sum(np.abs(terms), axis=0) + np.abs(lhs) + 1e-30
        out += _records("prop3.4.delta_cos2", lhs, rhs, scale, app, why,
                        tol_abs, tol_rel)

        if n == 2:
            Wpair = np.einsum("bij,bi,bj->b", snap.W0, snap.JHtop0,
                              np.nan_to_num(snap.grad_log_sin2))
            rhs_33 = 8.0 * Wpair
            scale = np.abs(np.nan_to_num(term32)) + np.abs(rhs_33) + \
                np.sqrt(snap.normH2) + 1e-30
            out += _records("prop3.4.term_3_3", np.nan_to_num(term32), rhs_33,
                            scale, app, why, tol_abs, tol_rel)
        if n >= 3:
            dfw_jh = sd * np.einsum("bi,bi->b", snap.delta_W0, snap.JHtop0)
            rhs_34 = (4.0 * n * (2.0 + (n - 4.0) * sin2)
                      / (sin2 * (n - 2.0))) * dfw_jh
            scale = np.abs(np.nan_to_num(term32)) + np.abs(rhs_34) + \
                np.sqrt(snap.normH2) + 1e-30
            out += _records("prop3.4.term_3_4", np.nan_to_num(term32), rhs_34,
                            scale, app, why, tol_abs, tol_rel)
    return out


def verify_section4(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                    tol_rel=TOL_REL_DEFAULT):
    """The n=2 divergence identity and its pointwise corollary."""
    B, n = snap.size, snap.n
    out = []
    if n != 2:
        return out
    R = einstein_constant(snap.ambient_spec)
    cosb = _costheta_bar(snap)
    sin2 = snap.sin2_0
    eq = snap.equal_gate
    offC = snap.masks["off_complex"]
    app, why = _reason_array(B, [(eq, "angles not equal"),
                                 (offC, "complex point")])
    with np.errstate(invalid="ignore", divide="ignore"):
        lhs = sin2 * cosb**2 * R
        Wpair_log = np.einsum("bij,bi,bj->b", snap.W0, snap.JHtop0,
                              np.nan_to_num(snap.grad_log_sin2))
        rhs = -2.0 * snap.div_Wsharp_JHtop + 2.0 * Wpair_log
        scale = np.abs(lhs) + 2.0 * np.abs(snap.div_Wsharp_JHtop) \
            + 2.0 * np.abs(Wpair_log) + snap.normH2 + 1e-30
        out += _records("eq4.1.divergence", lhs, rhs, scale, app, why,
                        tol_abs, tol_rel)

    # pointwise corollary: stated for parallel mean curvature
    sff_scale = np.max(np.abs(snap.sff0).reshape(B, -1), axis=1)
    parallel = np.max(np.abs(snap.nabla_perpH).reshape(B, -1), axis=1) \
        <= 1e-6 * (1.0 + sff_scale)
    app, why = _reason_array(B, [(eq, "angles not equal"),
                                 (parallel, "mean curvature not parallel")])
    lhs = sin2**2 * cosb**2 * R + 8.0 * sin2 * cosb**2 * snap.normH2
    Wpair_s2 = np.einsum("bij,bi,bj->b", snap.W0, snap.JHtop0,
                         snap.grad_sin2_0)
    rhs = 2.0 * Wpair_s2
    scale = np.abs(sin2**2 * cosb**2 * R) + 8.0 * sin2 * cosb**2 * snap.normH2 \
        + np.abs(rhs) + 1e-30
    out += _records("cor1.1.pointwise", lhs, rhs, scale, app, why,
                    tol_abs, tol_rel)
    return out


def verify_prop3_6(snap, conventions, tol_abs=TOL_ABS_DEFAULT,
                   tol_rel=TOL_REL_DEFAULT):
    """The sigma 1-form, its exterior derivative, and the constant-angle
    equalities; plus closedness of ((JH)^T)-flat on Lagrangian points."""
    B, n = snap.size, snap.n
    sd = conventions.delta_sign
    R = einstein_constant(snap.ambient_spec)
    cosb = _costheta_bar(snap)
    s = frame_sums(snap)
    out = []

    m_sig = snap.masks["sigma"]
    app, why = _reason_array(B, [
        (snap.equal_gate, "angles not equal"),
        (m_sig, "within buffer of the complex locus"),
    ])
    sigma = snap.sigma_jh0 + sd * snap.sigma_dw0
    scale = np.linalg.norm(np.nan_to_num(sigma), axis=1) + \
        np.linalg.norm(np.nan_to_num(snap.sigma_trace0), axis=1) + 1e-30
    out += _records("prop3.6.sigma_trace", sigma, snap.sigma_trace0, scale,
                    app, why, tol_abs, tol_rel)

    dsigma = snap.dsigma_jh0 + sd * snap.dsigma_dw0
    rhs = R * snap.W0
    scale = np.max(np.abs(np.nan_to_num(dsigma)).reshape(B, -1), axis=1) \
        + np.abs(R) * np.max(np.abs(snap.W0).reshape(B, -1), axis=1) + 1e-30
    out += _records("prop3.6.dsigma", dsigma.reshape(B, -1),
                    rhs.reshape(B, -1), scale, app, why, tol_abs, tol_rel)

    # constant-angle equalities
    const_angle = np.linalg.norm(snap.grad_cos2_0, axis=1) <= 1e-7 * (
        1.0 + np.abs(snap.cos2_0))
    app, why = _reason_array(B, [
        (snap.equal_gate, "angles not equal"),
        (const_angle, "angle not constant at this point"),
    ])
    lhs = R * cosb * snap.sin2_0
    mid = 2.0 * np.einsum("bij,bmi,bmj->b", snap.d_JHb,
                          snap.frame_X, snap.frame_Y)
    right = -4.0 * n * cosb * snap.normH2 - 8.0 * s["sumA_perp"]
    scale = np.abs(lhs) + np.abs(mid) + np.abs(right) + snap.normH2 + 1e-30
    out += _records("prop3.6.const_angle_left", lhs, mid, scale, app, why,
                    tol_abs, tol_rel)
    out += _records("prop3.6.const_angle_right", mid, right, scale, app, why,
                    tol_abs, tol_rel)

    # closedness of the (JH)-flat form at Lagrangian points
    lag = snap.classification == LAGRANGIAN
    app, why = _reason_array(B, [(lag, "not a Lagrangian point")])
    dnorm = np.max(np.abs(snap.d_JHb).reshape(B, -1), axis=1)
    scale = np.sqrt(snap.normH2) * (1.0 + np.max(
        np.abs(snap.sff0).reshape(B, -1), axis=1)) + 1e-30
    out += _records("cor2.1.closed", dnorm, np.zeros(B), scale, app, why,
                    tol_abs, tol_rel)
    return out


def evaluate_hypothesis_fields(snap, conventions):
    """Named diagnostic scalars from the hypothesis sides of the theorems.

    These are reported, not asserted (they are inequalities/diagnostics)."""
    B, n = snap.size, snap.n
    sd = conventions.delta_sign
    R = einstein_constant(snap.ambient_spec)
    cosb = _costheta_bar(snap)
    sin2 = snap.sin2_0
    Wpair_s2 = np.einsum("bij,bi,bj->b", snap.W0, snap.JHtop0,
                         snap.grad_sin2_0)
    dfw_jh = sd * np.einsum("bi,bi->b", snap.delta_W0, snap.JHtop0)
    fields = {
        "thm1.2.sign_field": R * Wpair_s2,
        "thm1.3.delta_fw_jh": dfw_jh,
        "remark2.combined": 4.0 * n**2 * cosb**2 * snap.normH2
        + n * sin2 * cosb**2 * R
        - (n - 2.0) ** 2 * np.nan_to_num(snap.norm_grad_costheta2)
        + 2.0 * n * dfw_jh,
        "prop1.2.parallel_defect": snap.normH2 + (sin2 / (4.0 * n)) * R,
        "prop3.5.isotropic_sum": _curv_sum(snap),
    }
    return fields


def run_identity_suite(snap, suites, conventions, tol_abs=TOL_ABS_DEFAULT,
                       tol_rel=TOL_REL_DEFAULT):
    """Evaluate the selected suites on a snapshot; returns records."""
    funcs = {
        "prop3.1": verify_prop3_1,
        "lemma3.1": verify_lemma3_1,
        "delta_kappa": verify_delta_kappa,
        "weitzenboeck": verify_weitzenboeck,
        "prop3.4": verify_prop3_4,
        "section4": verify_section4,
        "prop3.6": verify_prop3_6,
    }
    records = []
    for name in suites:
        if name == "hypotheses":
            continue
        records.extend(funcs[name](snap, conventions,
                                   tol_abs=tol_abs, tol_rel=tol_rel))
    return records


# ---------------------------------------------------------------------------
# sign calibration

CALIBRATION_SURFACE = (
    "n=1; ambient=flat; periodic; "
    "map=[cos(u1), sin(u1), cos(u2) + 0.3*sin(u1), "
    "sin(u2) + 0.2*cos(u1 + u2)]"
)


def _calibration_snapshot(order):
    spec = parse_immersion(CALIBRATION_SURFACE, name="calibration_surface")
    rng = np.random.default_rng(20240817)
    pts = rng.uniform(0.0, 2.0 * np.pi, size=(160, 2))
    snap = compute_snapshot(spec, pts, order=order)
    return snap


@lru_cache(maxsize=4)
def calibrate_conventions(order=3):
    """Fix (s_delta, delta_sign) on the built-in calibration surface.

    s_delta: the n=1 angle-Laplacian identity must close.
    delta_sign: the form-codifferential identity delta(F*w)# =
    (n-2) J_w(grad cos theta) must close.
    Raises ConventionError unless exactly one assignment of each closes.
    """
    snap = _calibration_snapshot(order)
    gate, _ = _delta_kappa_gate(snap)
    strong = gate & (np.abs(snap.lap_kappa) > 1e-3)
    if np.count_nonzero(strong) < 10:
        raise ConventionError("calibration surface yields too few generic points")

    closing_sD = []
    for sD in (1, -1):
        conv = Conventions(s_delta=sD, delta_sign=1)
        recs = [r for r in verify_delta_kappa(snap, conv)
                if r.id == "cor3.2.delta_kappa" and r.applicable
                and strong[r.point_index]]
        rels = np.array([r.rel_residual for r in recs])
        if rels.size and np.max(rels) < 1e-5:
            closing_sD.append(sD)
    if len(closing_sD) != 1:
        raise ConventionError(
            f"scalar-Laplacian sign calibration not unique: {closing_sD}"
        )

    closing_sd = []
    for sd in (1, -1):
        conv = Conventions(s_delta=closing_sD[0], delta_sign=sd)
        recs = [r for r in verify_prop3_1(snap, conv)
                if r.id == "prop3.1.delta_form" and r.applicable]
        rels = np.array([r.rel_residual for r in recs])
        if rels.size and np.max(rels) < 1e-5:
            closing_sd.append(sd)
    if len(closing_sd) != 1:
        raise ConventionError(
            f"codifferential sign calibration not unique: {closing_sd}"
        )
    return Conventions(s_delta=closing_sD[0], delta_sign=closing_sd[0])
