import numpy as np
import pytest

from heislab import heis
from heislab.errors import DimensionMismatchError, GaugeOriginError, NonUnitaryError

rng = np.random.Generator(np.random.Philox(key=101))

N_CASES = 100_000


def random_points(n, size):
    return heis.HeisPoint(
        rng.normal(size=(size, n)),
        rng.normal(size=(size, n)),
        rng.normal(size=size),
    )


def max_coord_diff(p, q):
    return max(
        float(np.max(np.abs(p.x - q.x))),
        float(np.max(np.abs(p.y - q.y))),
        float(np.max(np.abs(p.phi - q.phi))),
    )


@pytest.mark.parametrize("n", [1, 2, 3])
def test_group_axioms(n):
    size = N_CASES
    p = random_points(n, size)
    q = random_points(n, size)
    r = random_points(n, size)

    assoc = max_coord_diff(
        heis.group_mul(heis.group_mul(p, q), r),
        heis.group_mul(p, heis.group_mul(q, r)),
    )
    assert assoc < 1e-10

    e = heis.identity(n, (size,))
    assert max_coord_diff(heis.group_mul(p, e), p) == 0.0
    assert max_coord_diff(heis.group_mul(e, p), p) == 0.0

    inv = max_coord_diff(heis.group_mul(p, heis.group_inv(p)), e)
    assert inv < 1e-10


def test_left_invariance_of_distance():
    n = 2
    p = random_points(n, N_CASES)
    q = random_points(n, N_CASES)
    g = random_points(n, N_CASES)
    d0 = heis.fk_dist(p, q)
    d1 = heis.fk_dist(heis.group_mul(g, p), heis.group_mul(g, q))
    assert np.max(np.abs(d1 - d0)) < 1e-10


def test_cygan_triangle_inequality():
    n = 2
    p = random_points(n, N_CASES)
    q = random_points(n, N_CASES)
    r = random_points(n, N_CASES)
    lhs = heis.fk_dist(p, r)
    rhs = heis.fk_dist(p, q) + heis.fk_dist(q, r)
    assert np.max(lhs - rhs) < 1e-10


def test_gauge_homogeneity_under_dilations():
    n = 3
    p = random_points(n, N_CASES)
    s = rng.uniform(0.1, 10.0, size=N_CASES)
    tau = heis.fk_gauge(p)
    tau_s = heis.fk_gauge(heis.dilate(s, p))
    assert np.max(np.abs(tau_s - s * tau) / np.maximum(1.0, s * tau)) < 1e-10


def test_dilation_is_automorphism():
    n = 2
    p = random_points(n, N_CASES)
    q = random_points(n, N_CASES)
    lhs = heis.dilate(3.0, heis.group_mul(p, q))
    rhs = heis.group_mul(heis.dilate(3.0, p), heis.dilate(3.0, q))
    assert max_coord_diff(lhs, rhs) < 1e-10


def random_unitary(n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def test_unitary_action_is_gauge_isometry_and_automorphism():
    n = 3
    U = random_unitary(n)
    p = random_points(n, N_CASES)
    q = random_points(n, N_CASES)
    Up = heis.unitary_act(U, p)
    Uq = heis.unitary_act(U, q)
    assert np.max(np.abs(heis.fk_gauge(Up) - heis.fk_gauge(p))) < 1e-10
    assert max_coord_diff(heis.unitary_act(U, heis.group_mul(p, q)), heis.group_mul(Up, Uq)) < 1e-10
    assert np.max(np.abs(Up.phi - p.phi)) == 0.0


def test_unitary_rejects_non_unitary_matrix():
    with pytest.raises(NonUnitaryError):
        heis.unitary_act(np.diag([2.0, 1.0]), random_points(2, 4))


def test_horizontal_frame_annihilates_contact_form():
    p = random_points(2, 10_000)
    frame = heis.horizontal_frame(p)
    assert np.max(np.abs(heis.contact_eval(p, frame))) < 1e-14


def test_contact_eval_vertical_direction():
    p = random_points(2, 100)
    vert = heis.TangentVector(np.zeros((100, 2)), np.zeros((100, 2)), np.ones(100))
    assert np.max(np.abs(heis.contact_eval(p, vert) - 1.0)) == 0.0


def test_gauge_gradient_norm_at_most_one():
    # |grad_H tau| = |z|/tau <= 1 everywhere away from the center.
    p = random_points(2, N_CASES)
    norms = heis.hgrad_tau(p)
    assert np.max(norms) <= 1.0 + 1e-10
    assert np.min(norms) >= 0.0


def test_gauge_gradient_rejects_origin():
    with pytest.raises(GaugeOriginError):
        heis.hgrad_tau(heis.identity(2))


def test_dimension_mismatch_rejected():
    p = random_points(2, 8)
    q = random_points(3, 8)
    with pytest.raises(DimensionMismatchError):
        heis.group_mul(p, q)


def test_dilate_rejects_nonpositive_factor():
    with pytest.raises(ValueError):
        heis.dilate(0.0, random_points(2, 4))


def test_plane_basis_columns_orthonormal():
    for n in (1, 2, 3):
        A = rng.normal(size=(n, n))
        A = 0.4 * (A + A.T) / 2
        B, Bp = heis.plane_basis(A)
        assert np.allclose(B.T @ B, np.eye(n), atol=1e-12)
        assert np.allclose(Bp.T @ B, np.zeros((n, n)), atol=1e-12)


def test_plane_projection_idempotent():
    n = 2
    A = np.array([[0.3, 0.1], [0.1, -0.2]])
    B, _ = heis.plane_basis(A)
    z = rng.normal(size=(1000, 2 * n))
    coords = heis.plane_project_p(A, z)
    ambient = coords @ B.T
    assert np.max(np.abs(heis.plane_project_p(A, ambient) - coords)) < 1e-12
    assert np.max(np.abs(heis.plane_project_q(A, ambient))) < 1e-12
