import numpy as np
import pytest

from heislab import fields, graph, heis, wedge


def quad_field(A, n=2, points=65, extent=1.0):
    A = np.asarray(A, dtype=float)
    return fields.field_from_function(
        lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, A, x), n, points, extent
    )


def test_lift_is_exact_on_nodes():
    """phi_map puts base points on the graph with the right height twist."""
    v = quad_field([[0.5, 0.1], [0.1, -0.3]])
    pts = np.random.default_rng(0).uniform(-0.8, 0.8, size=(50, 2))
    p = graph.phi_map(v, pts)
    g = v.interp_grad(pts)
    assert np.allclose(p.x, pts)
    assert np.allclose(p.y, g, atol=1e-12)
    expect_phi = 0.5 * np.einsum("ri,ri->r", pts, g) - v.interp_values(pts)
    assert np.allclose(p.phi, expect_phi, atol=1e-13)


def test_lift_of_zero_potential_is_horizontal_plane():
    v = fields.ScalarField(np.zeros((17, 17)), 0.125, np.zeros(2))
    p = graph.phi_map(v, np.array([[0.3, -0.4]]))
    assert np.max(np.abs(p.phi)) == 0.0
    assert np.max(np.abs(p.y)) == 0.0


def test_graph_frame_is_horizontal():
    v = quad_field([[0.5, 0.1], [0.1, -0.3]])
    pts = np.random.default_rng(1).uniform(-0.7, 0.7, size=(40, 2))
    frame = graph.graph_frame(v, pts)
    base = graph.phi_map(v, pts)
    resid = heis.contact_eval(base, frame)
    assert np.max(np.abs(resid)) < 1e-10


def test_contact_residual_refinement_order():
    """Residual of a smooth non-polynomial potential decays at second order."""
    def fn(x):
        return np.sin(x[..., 0]) * np.cos(x[..., 1])

    resids = []
    for P in (65, 129, 257):
        v = fields.field_from_function(fn, 2, P, 1.0)
        resids.append(graph.contact_residual(v))
    r1 = resids[0] / resids[1]
    r2 = resids[1] / resids[2]
    order1 = np.log2(r1)
    order2 = np.log2(r2)
    assert order1 > 1.9
    assert order2 > 1.9


def test_contact_residual_exact_for_quadratics():
    v = quad_field([[0.5, 0.1], [0.1, -0.3]], points=33)
    assert graph.contact_residual(v) < 1e-12


def test_jacobian_closed_form():
    H = np.array([[0.5, 0.1], [0.1, -0.3]])
    J = graph.jacobian(H[None])[0]
    assert J == pytest.approx(np.sqrt(np.linalg.det(np.eye(2) + H @ H)), rel=1e-14)


def test_area_flat_graph_matches_ball():
    v = fields.ScalarField(np.zeros((65, 65)), 2.0 / 64.0, np.zeros(2))
    a = graph.area(v, np.zeros(2), 0.8, refine=8)
    assert a == pytest.approx(np.pi * 0.64, rel=2e-4)


def test_area_affine_graph_scales_by_jacobian():
    slope = np.array([0.4, -0.2])
    v = fields.field_from_function(lambda x: x @ slope, 2, 129, 1.0)
    a = graph.area(v, np.zeros(2), 0.5, refine=8)
    # Affine potential has zero Hessian, so the lift jacobian is 1.
    assert a == pytest.approx(np.pi * 0.25, rel=2e-4)


def test_area_h_identity_matches_area():
    v = quad_field([[0.3, 0.0], [0.0, 0.2]], points=65)
    a0 = graph.area(v, np.zeros(2), 0.6, refine=6)
    a1 = graph.area_h(v, wedge.identity_metric(2), np.zeros(2), 0.6, refine=6)
    assert a1 == pytest.approx(a0, rel=1e-12)


def test_area_h_anisotropic_scaling():
    # Metric diag(c) on a flat graph scales area by sqrt(det of the P block).
    v = fields.ScalarField(np.zeros((65, 65)), 2.0 / 64.0, np.zeros(2))
    m = wedge.MetricForm(np.diag([2.0, 2.0, 1.0, 1.0]))
    a = graph.area_h(v, m, np.zeros(2), 0.5, refine=6)
    a0 = graph.area(v, np.zeros(2), 0.5, refine=6)
    assert a == pytest.approx(2.0 * a0, rel=1e-12)


def test_tilt_two_routes_agree():
    """Polarized n-vector inner products vs the determinant ratio formula."""
    rng = np.random.default_rng(7)
    v = quad_field([[0.5, 0.1], [0.1, -0.3]], points=65)
    A = np.array([[0.2, -0.1], [-0.1, 0.4]])
    pts = rng.uniform(-0.7, 0.7, size=(25, 2))
    H = v.interp_hess(pts)
    batch = graph.tilt_batch(H, A)
    for k in range(pts.shape[0]):
        ref = graph.tilt_point(v, pts[k], A)
        assert batch[k] == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_tilt_vanishes_on_own_plane():
    A = np.array([[0.2, -0.1], [-0.1, 0.4]])
    v = quad_field(A, points=65)
    # At the origin the graph tangent plane is exactly the chart plane A... H(0)=A.
    t = graph.tilt_point(v, np.zeros(2), A)
    assert abs(t) < 1e-12


def test_tilt_pointwise_identity_with_jacobians():
    # (tilt/2) * J == J - det(I + H A)/J_A for every H, A.
    rng = np.random.default_rng(8)
    for _ in range(200):
        H = wedge.random_symmetric(rng, 2, 0.6)
        A = wedge.random_symmetric(rng, 2, 0.6)
        J = graph.jacobian(H[None])[0]
        JA = graph.jacobian(A[None])[0]
        lhs = 0.5 * graph.tilt_batch(H[None], A)[0] * J
        rhs = J - np.linalg.det(np.eye(2) + H @ A) / JA
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_height_nodes_match_phi_map():
    v = quad_field([[0.5, 0.1], [0.1, -0.3]], points=33)
    nodes = graph.height_nodes(v)
    mesh = v.node_mesh()
    inner = (slice(2, -2),) * 2
    p = graph.phi_map(v, mesh[inner].reshape(-1, 2))
    assert np.allclose(nodes[inner].reshape(-1), p.phi, atol=1e-12)
