import numpy as np
import pytest

from heislab import fields
from heislab.errors import DimensionMismatchError, GridError, GridRegionError


def centered(values, extent=1.0):
    P = values.shape[0]
    n = values.ndim
    return fields.ScalarField(values, 2 * extent / (P - 1), np.zeros(n))


def test_grid_must_be_odd_and_square():
    with pytest.raises(GridError):
        centered(np.zeros((8, 8)))
    with pytest.raises(GridError):
        centered(np.zeros((9, 7)))
    with pytest.raises(GridError):
        fields.ScalarField(np.zeros(9), -0.1, np.zeros(1))


def test_origin_dimension_checked():
    with pytest.raises(DimensionMismatchError):
        fields.ScalarField(np.zeros((9, 9)), 0.25, np.zeros(3))


def test_extent_and_axes():
    f = centered(np.zeros((17, 17)), extent=2.0)
    assert f.extent == pytest.approx(2.0)
    xs = f.axis_coords(0)
    assert xs[0] == pytest.approx(-2.0)
    assert xs[-1] == pytest.approx(2.0)
    assert xs[8] == pytest.approx(0.0)


def test_node_mesh_shape():
    f = centered(np.zeros((9, 9, 9)))
    assert f.node_mesh().shape == (9, 9, 9, 3)


def test_serialization_round_trip_is_bit_exact():
    rng = np.random.default_rng(12)
    f = fields.ScalarField(rng.normal(size=(11, 11)), 0.37, np.array([0.2, -1.4]))
    g = fields.ScalarField.from_json(f.to_json())
    assert g == f
    assert g.values.tobytes() == f.values.tobytes()


def test_interp_values_exact_on_multilinear_function():
    # Trilinear interpolation reproduces affine functions exactly.
    f = fields.field_from_function(lambda x: 2.0 * x[..., 0] - x[..., 1] + 0.5, 2, 33, 1.0)
    pts = np.random.default_rng(1).uniform(-0.9, 0.9, size=(200, 2))
    vals = f.interp_values(pts)
    expect = 2.0 * pts[:, 0] - pts[:, 1] + 0.5
    assert np.max(np.abs(vals - expect)) < 1e-12


def test_gradient_and_hessian_nodes_on_quadratic():
    A = np.array([[0.6, 0.2], [0.2, -0.4]])
    f = fields.field_from_function(lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, A, x), 2, 33, 1.0)
    mesh = f.node_mesh()
    grad_expect = np.einsum("ij,...j->...i", A, mesh)
    err = np.abs(f.grad - grad_expect)
    assert np.nanmax(err) < 1e-10
    hess_err = np.abs(f.hess - A)
    assert np.nanmax(hess_err) < 1e-10
    # The unusable rim is marked, not silently extrapolated.
    assert np.all(np.isnan(f.grad[0]))
    assert np.all(np.isnan(f.hess[-1]))


def test_interp_grad_rejects_rim_points():
    f = fields.field_from_function(lambda x: x[..., 0] ** 2, 2, 17, 1.0)
    with pytest.raises(GridRegionError):
        f.interp_grad(np.array([[0.999, 0.0]]))


def test_interp_hess_quadratic_exact_inside():
    A = np.array([[0.6, 0.2], [0.2, -0.4]])
    f = fields.field_from_function(lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, A, x), 2, 33, 1.0)
    pts = np.random.default_rng(2).uniform(-0.8, 0.8, size=(100, 2))
    H = f.interp_hess(pts)
    assert np.max(np.abs(H - A)) < 1e-10


def test_field_from_function_center_offset():
    f = fields.field_from_function(lambda x: x[..., 0], 1, 9, 1.0, center=[2.0])
    assert f.origin[0] == pytest.approx(2.0)
    assert f.axis_coords(0)[0] == pytest.approx(1.0)


def test_values_cast_to_float_array():
    f = fields.ScalarField([0, 1, 2, 3, 4], 0.5, [0.0])
    assert f.values.dtype == np.float64
    assert f.n == 1
