"""Torus quadrature: Stokes-type vanishing, the global form identity, and
spectral convergence of the uniform rule on periodic integrands."""

import numpy as np
import pytest

from kangle.catalog import get_entry
from kangle.dsl import parse_immersion
from kangle.errors import UsageError
from kangle.quadrature import torus_quadrature

PERIODIC_2D = ("lagrangian_torus_2", "trig_flat_2d", "trig_sf_pos",
               "trig_sf_neg", "calibration_surface")


@pytest.mark.parametrize("name", PERIODIC_2D)
def test_stokes_vanishing_at_64(name):
    spec = get_entry(name).spec()
    vol = torus_quadrature(spec, "volume", 64)
    assert vol > 0
    div = torus_quadrature(spec, "div_field", 64)
    lap = torus_quadrature(spec, "lap_cos2", 64)
    assert abs(div) <= 1e-8 * max(vol, 1.0)
    assert abs(lap) <= 1e-8 * max(vol, 1.0)


def test_lap_f_integral_vanishes():
    spec = get_entry("trig_flat_2d").spec()
    f = parse_immersion(
        "n=1; ambient=flat; map=[sin(u1 + 2*u2) + cos(u2), 0, 0, 0]"
    ).components[0]
    val = torus_quadrature(spec, "lap_f", 64, f_expr=f)
    assert abs(val) < 1e-8


@pytest.mark.parametrize("name", ["trig_flat_2d", "trig_sf_pos", "trig_sf_neg"])
def test_global_form_identity_at_64(name):
    """integral of <Hodge-Laplacian of F*w, F*w> equals integral of
    |delta F*w|^2 on a closed domain."""
    spec = get_entry(name).spec()
    lhs = torus_quadrature(spec, "hodge_pair", 64)
    rhs = torus_quadrature(spec, "delta_fw_norm2", 64)
    assert rhs > 1e-6  # non-trivial content
    assert abs(lhs - rhs) <= 1e-6 * rhs


def test_spectral_convergence_ratio():
    """Error at N=16 vs N=32 drops by more than 1e3 (above the noise floor)."""
    spec = get_entry("trig_flat_2d").spec()
    exact = torus_quadrature(spec, "delta_fw_norm2", 96)
    errs = {N: abs(torus_quadrature(spec, "delta_fw_norm2", N) - exact)
            for N in (16, 32)}
    assert errs[16] > 1e-12  # above floor, ratio is meaningful
    assert errs[16] / max(errs[32], 1e-300) > 1e3


def test_lagrangian_t4_integrals_vanish():
    spec = get_entry("lagrangian_torus_4").spec()
    assert torus_quadrature(spec, "hodge_pair", 8) == 0.0
    assert torus_quadrature(spec, "delta_fw_norm2", 8) == 0.0
    assert abs(torus_quadrature(spec, "lap_cos2", 8)) < 1e-12


def test_nonperiodic_rejected():
    spec = get_entry("ds_graph").spec()
    with pytest.raises(UsageError):
        torus_quadrature(spec, "volume", 16)
    with pytest.raises(UsageError):
        torus_quadrature(get_entry("lagrangian_torus_2").spec(), "volume", 4)
