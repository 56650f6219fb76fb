"""Ambient-space validation: Einstein property, Kahler property, curvature."""

import numpy as np
import pytest

import kangle.calculus as ca
from kangle.ambient import (
    ambient_J,
    ambient_curvature,
    ambient_metric,
    ambient_metric_point,
    check_chart_domain,
    curvature_tensor_point,
    einstein_constant,
    flat_space,
    space_form,
)
from kangle.errors import ChartDomainError, UsageError
from kangle.jets import jet_seed_all


def _chart_points(rng, spec, count):
    scale = 0.45 if spec.rho < 0 else 0.8
    return rng.uniform(-scale, scale, (count, spec.real_dim)) \
        / np.sqrt(spec.complex_dim)


def test_J_square_and_hermitian():
    rng = np.random.default_rng(0)
    for spec in (flat_space(2), space_form(1.0, 2), space_form(-0.5, 4)):
        J = ambient_J(spec)
        assert np.array_equal(J @ J, -np.eye(spec.real_dim))
        z = _chart_points(rng, spec, 20)
        g = ambient_metric_point(spec, z)
        X = rng.normal(size=(20, spec.real_dim))
        Y = rng.normal(size=(20, spec.real_dim))
        JX = np.einsum("ab,...b->...a", J, X)
        JY = np.einsum("ab,...b->...a", J, Y)
        gXY = np.einsum("...ab,...a,...b->...", g, X, Y)
        gJXJY = np.einsum("...ab,...a,...b->...", g, JX, JY)
        assert np.max(np.abs(gXY - gJXJY)) < 1e-10
        # w(X, Y) = g(JX, Y) is antisymmetric
        w = np.einsum("...ab,...a,...b->...", g, JX, Y) \
            + np.einsum("...ab,...a,...b->...", g, JY, X)
        assert np.max(np.abs(w)) < 1e-12


def test_metric_identity_at_origin_and_flat():
    spec = space_form(1.0, 2)
    g = ambient_metric_point(spec, np.zeros((1, 4)))
    assert np.allclose(g[0], np.eye(4))
    flat = flat_space(3)
    z = np.random.default_rng(1).normal(size=(5, 6))
    assert np.allclose(ambient_metric_point(flat, z),
                       np.broadcast_to(np.eye(6), (5, 6, 6)))


def test_metric_jets_match_pointwise():
    rng = np.random.default_rng(2)
    spec = space_form(1.0, 2)
    z = _chart_points(rng, spec, 7)
    gj = ambient_metric(spec, ca.jstack(jet_seed_all(4, 2, z)))
    g = ambient_metric_point(spec, z)
    assert np.max(np.abs(np.moveaxis(gj.value(), -1, 0) - g)) < 1e-10


def test_holomorphic_sectional_curvature():
    rng = np.random.default_rng(3)
    for rho in (1.0, -1.0, 0.5, -0.5):
        spec = space_form(rho, 2)
        z = _chart_points(rng, spec, 10)
        g = ambient_metric_point(spec, z)
        J = ambient_J(spec)
        X = rng.normal(size=(10, 4))
        JX = np.einsum("ab,...b->...a", J, X)
        num = ambient_curvature(spec, z, X, JX, JX, X)
        n2 = np.einsum("...ab,...a,...b->...", g, X, X)
        assert np.max(np.abs(num / n2**2 - 4.0 * rho)) < 1e-10


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("rho", [1.0, -1.0, 0.5, -0.5])
def test_einstein_property(n, rho):
    """Numerically contracted Ricci equals R g at 20 random chart points."""
    rng = np.random.default_rng(10 * n + int(rho * 10) % 7)
    spec = space_form(rho, 2 * n)
    z = _chart_points(rng, spec, 20)
    g = ambient_metric_point(spec, z)
    R = curvature_tensor_point(spec, z)
    ric = np.einsum("...il,...iyzl->...yz", np.linalg.inv(g), R)
    defect = np.max(np.abs(ric - einstein_constant(spec) * g))
    assert defect < 1e-7


def test_einstein_constant_values():
    assert einstein_constant(flat_space(2)) == 0.0
    assert einstein_constant(space_form(1.0, 2)) == 6.0
    assert einstein_constant(space_form(-0.5, 4)) == -5.0


@pytest.mark.parametrize("n,rho", [(1, 1.0), (1, -1.0), (2, 0.5), (2, -0.5)])
def test_closed_form_vs_jet_curvature(n, rho):
    """Closed-form curvature vs the jet/Christoffel route, 20 points."""
    rng = np.random.default_rng(n + int(3 * rho) % 5)
    spec = space_form(rho, 2 * n)
    z = _chart_points(rng, spec, 20)
    gj = ambient_metric(spec, ca.jstack(jet_seed_all(spec.real_dim, 3, z)))
    gamma = ca.christoffel(gj)
    R_jet = ca.riemann_from_christoffel(gamma, gj)
    R_closed = curvature_tensor_point(spec, z)
    scale = np.max(np.abs(R_closed))
    assert np.max(np.abs(R_jet - R_closed)) / scale < 1e-6


def test_kahler_condition_nabla_J():
    rng = np.random.default_rng(4)
    spec = space_form(-1.0, 2)
    z = _chart_points(rng, spec, 10)
    gj = ambient_metric(spec, ca.jstack(jet_seed_all(4, 3, z)))
    gamma = ca.christoffel(gj)
    J = ambient_J(spec)
    Jc = np.zeros((4, 4, 10, gj.coeffs.shape[-1]))
    Jc[..., 0] = J[:, :, None]
    from kangle.jets import Jet
    nJ = ca.cov_d_11tensor(Jet(4, 3, Jc), gamma)
    assert np.max(np.abs(nJ.value())) < 1e-8


def test_kahler_form_closed():
    rng = np.random.default_rng(5)
    spec = space_form(0.5, 2)
    z = _chart_points(rng, spec, 10)
    gj = ambient_metric(spec, ca.jstack(jet_seed_all(4, 2, z)))
    J = ambient_J(spec)
    from kangle.jets import jet_einsum
    w = jet_einsum("ca,cb...->ab...", J, gj)   # w_ab = g(J e_a, e_b)
    dw = ca.exterior_d_twoform(w)
    assert np.max(np.abs(dw.value())) < 1e-8


def test_first_bianchi():
    rng = np.random.default_rng(6)
    spec = space_form(-0.5, 4)
    z = _chart_points(rng, spec, 8)
    R = curvature_tensor_point(spec, z)
    bianchi = R + np.einsum("bijkl->bjkil", R) + np.einsum("bijkl->bkijl", R)
    assert np.max(np.abs(bianchi)) < 1e-10


def test_chart_domain_rejection():
    spec = space_form(-1.0, 2)
    with pytest.raises(ChartDomainError):
        check_chart_domain(spec, np.array([1.0, 0.1, 0.0, 0.0]))
    # rho > 0 has no boundary
    check_chart_domain(space_form(1.0, 2), np.array([10.0, 0.0, 0.0, 0.0]))


def test_spec_validation():
    with pytest.raises(UsageError):
        space_form(0.0, 2)
    with pytest.raises(UsageError):
        from kangle.ambient import AmbientSpec
        AmbientSpec("flat", 1.0, 2)
