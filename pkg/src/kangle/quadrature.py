"""Uniform-grid quadrature on 2pi-periodic immersions.

For periodic analytic integrands the rectangle (= trapezoidal) rule on a
uniform grid converges spectrally, which the suite exploits to check the
integral identities: total integrals of Laplacians vanish, and the global
pairing of the form Laplacian against the form equals the codifferential
norm.
"""

from __future__ import annotations

import numpy as np

from .calculus import trace_hessian
from .dsl import parse_immersion
from .errors import UsageError
from .geometry import compute_snapshot
from .jets import jet_seed_all

__all__ = ["torus_quadrature", "INTEGRANDS"]


def _integrand_volume(snap, _):
    return np.ones(snap.size)


def _integrand_lap_f(snap, f_expr):
    if f_expr is None:
        raise UsageError("integrand 'lap_f' needs f_expr")
    from .dsl import _eval_expr
    seeds = jet_seed_all(snap.domain_dim, snap.order, snap.points)
    f = _eval_expr(f_expr, seeds)
    return trace_hessian(f, snap.jets["g_inv"], snap.jets["gamma"]).value()

def _integrand_lap_cos2(snap, _):
    return snap.lap_cos2


def _integrand_hodge_pair(snap, _):
    return snap.hodge_pair


def _integrand_delta_fw_norm2(snap, _):
    return snap.norm_delta_W2


def _integrand_div_field(snap, _):
    """Divergence of a fixed smooth periodic vector field (Stokes check)."""
    from .calculus import divergence, jstack
    from .jets import jet_unary
    seeds = jet_seed_all(snap.domain_dim, snap.order, snap.points)
    comps = []
    for i in range(snap.domain_dim):
        j = (i + 1) % snap.domain_dim
        comps.append(jet_unary(seeds[i] + 0.5 * seeds[j], "sin")
                     + jet_unary(seeds[j], "cos") * 0.3)
    V = jstack(comps)
    return divergence(V, snap.jets["gamma"]).value()


INTEGRANDS = {
    "volume": _integrand_volume,
    "lap_f": _integrand_lap_f,
    "lap_cos2": _integrand_lap_cos2,
    "hodge_pair": _integrand_hodge_pair,
    "delta_fw_norm2": _integrand_delta_fw_norm2,
    "div_field": _integrand_div_field,
}


def torus_quadrature(spec, integrand, grid_n, order=3, f_expr=None,
                     chunk=4096):
    """Integrate ``integrand . Vol_M`` over the coordinate torus.

    spec: a periodic ImmersionSpec (or its text).  integrand: a key of
    INTEGRANDS or a callable snapshot -> per-point values.  grid_n: points
    per axis (>= 8).
    """
    if isinstance(spec, str):
        spec = parse_immersion(spec)
    if not spec.periodic:
        raise UsageError("torus quadrature needs a periodic immersion")
    if grid_n < 8:
        raise UsageError("grid_n must be at least 8")
    d = spec.domain_dim
    fn = INTEGRANDS[integrand] if isinstance(integrand, str) else integrand
    axis = np.arange(grid_n) * (2.0 * np.pi / grid_n)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    total = 0.0
    for start in range(0, pts.shape[0], chunk):
        block = pts[start:start + chunk]
        snap = compute_snapshot(spec, block, order=order)
        vals = np.asarray(fn(snap, f_expr) if isinstance(integrand, str)
                          else fn(snap))
        total += float(np.sum(vals * snap.sqrt_det_g0))
    return total * (2.0 * np.pi / grid_n) ** d
