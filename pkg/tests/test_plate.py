"""Checks for the clamped fourth-order model solver.

The discrete operator is built from centered second differences, so its
bilinear form is exact on cubic polynomials; that makes polynomial
reproduction a sharp correctness test rather than a convergence study.
"""

import numpy as np
import pytest
from scipy import sparse

from heislab import fields, plate, wedge
from heislab.errors import EllipticityError


def poly_field(fn, n, points=33, extent=1.0):
    return fields.field_from_function(fn, n, points, extent)


def random_spd_metric(rng, n, jitter=0.0):
    M = rng.normal(size=(2 * n, 2 * n))
    return wedge.MetricForm(M @ M.T + (2 * n + jitter) * np.eye(2 * n))


def test_identity_coefficients_are_kronecker_deltas():
    for n in (1, 2, 3):
        C = plate.identity_coefficients(n)
        expect = np.einsum("ik,jl->ijkl", np.eye(n), np.eye(n))
        assert np.max(np.abs(C.a - expect)) < 1e-12
        assert C.b.shape == (n, n)


def test_coefficients_from_identity_metric_match_closed_form():
    for n in (1, 2, 3):
        C = plate.compute_coefficients(wedge.identity_metric(n), n)
        D = plate.identity_coefficients(n)
        assert np.max(np.abs(C.a - D.a)) < 1e-10


def test_coefficient_serialization_round_trip():
    rng = np.random.default_rng(21)
    C = plate.compute_coefficients(random_spd_metric(rng, 2), 2)
    again = plate.CoefficientTensor.from_json_dict(C.to_json_dict())
    assert np.array_equal(again.a, C.a)
    assert np.array_equal(again.b, C.b)
    assert again.pi0_norm_h == C.pi0_norm_h


def test_ellipticity_identity_is_one():
    for n in (2, 3):
        lam = plate.check_ellipticity(plate.identity_coefficients(n))
        assert lam == pytest.approx(1.0, rel=1e-10)


def test_ellipticity_positive_for_spd_metrics():
    rng = np.random.default_rng(22)
    for _ in range(5):
        C = plate.compute_coefficients(random_spd_metric(rng, 2), 2)
        assert plate.check_ellipticity(C) > 0.0


def test_stiffness_is_symmetric_positive_definite():
    rng = np.random.default_rng(23)
    C = plate.compute_coefficients(random_spd_metric(rng, 2), 2)
    P, h = 17, 2.0 / 16.0
    K = plate.assemble_stiffness(C, P, h)
    asym = abs(K - K.T).max()
    assert asym < 1e-12
    free = plate.free_node_mask(P, 2).reshape(-1)
    Kff = K[free][:, free].toarray()
    eigs = np.linalg.eigvalsh(Kff)
    assert eigs[0] > 0.0


@pytest.mark.parametrize(
    "n,points,fn",
    [
        (1, 129, lambda x: x[..., 0] ** 3 - 0.5 * x[..., 0] ** 2 + x[..., 0]),
        (2, 129, lambda x: x[..., 0] ** 3 - 3.0 * x[..., 0] * x[..., 1] ** 2),
        (2, 129, lambda x: x[..., 0] ** 2 * x[..., 1] + 0.25 * x[..., 1] ** 3),
        (3, 21, lambda x: x[..., 0] * x[..., 1] * x[..., 2] + x[..., 2] ** 3),
    ],
)
def test_cubics_are_exact_solutions_identity(n, points, fn):
    """Discrete bilinear form is exact on cubics, so they solve exactly."""
    bf = poly_field(fn, n, points)
    sol = plate.solve_dirichlet(plate.identity_coefficients(n), bf)
    assert np.max(np.abs(sol.field.values - bf.values)) < 1e-9


def test_cubic_exact_for_anisotropic_metric():
    bf = poly_field(lambda x: x[..., 0] ** 3 - 3.0 * x[..., 0] * x[..., 1] ** 2, 2, 65)
    C = plate.compute_coefficients(wedge.MetricForm(np.diag([1.0, 2.0, 3.0, 4.0])), 2)
    sol = plate.solve_dirichlet(C, bf)
    assert np.max(np.abs(sol.field.values - bf.values)) < 1e-9


def test_clamped_layers_are_bit_exact():
    rng = np.random.default_rng(24)
    bf = fields.ScalarField(rng.normal(size=(33, 33)), 0.0625, np.zeros(2))
    sol = plate.solve_dirichlet(plate.identity_coefficients(2), bf)
    P = 33
    idx = np.indices((P, P))
    depth = np.minimum(idx.min(axis=0), (P - 1) - idx.max(axis=0))
    clamped = depth < 2
    assert np.array_equal(sol.field.values[clamped], bf.values[clamped])


def test_solution_residual_small():
    bf = poly_field(lambda x: np.sin(2 * x[..., 0]) * x[..., 1], 2, 65)
    sol = plate.solve_dirichlet(plate.identity_coefficients(2), bf)
    assert sol.residual < 1e-10
    assert sol.solver in ("sparse-direct", "conjugate-gradient")


def test_energy_of_quadratic_closed_form():
    # For v = x1^2 + x2^2 the discrete Hessian is 2 I at every interior node,
    # the identity-coefficient energy density is |H|_F^2 = 8, and the interior
    # covers ((P-3) h)^2 of area... counted as (P-2)^2 cells of size h^2.
    P, extent = 33, 1.0
    bf = poly_field(lambda x: x[..., 0] ** 2 + x[..., 1] ** 2, 2, P, extent)
    h = 2 * extent / (P - 1)
    C = plate.identity_coefficients(2)
    e = plate.energy(C, bf)
    expect = 8.0 * ((P - 2) * h) ** 2
    assert e == pytest.approx(expect, rel=1e-12)


def test_plate_solution_minimizes_energy():
    rng = np.random.default_rng(25)
    bf = poly_field(lambda x: np.sin(1.5 * x[..., 0]) * np.cos(x[..., 1]), 2, 33)
    C = plate.identity_coefficients(2)
    sol = plate.solve_dirichlet(C, bf)
    base = plate.energy(C, sol.field)
    free = plate.free_node_mask(33, 2).reshape(33, 33)
    for _ in range(5):
        bump = rng.normal(size=(33, 33)) * 1e-3
        perturbed = sol.field.values + np.where(free, bump, 0.0)
        trial = fields.ScalarField(perturbed, sol.field.spacing, sol.field.origin)
        assert plate.energy(C, trial) >= base - 1e-13


def test_small_grids_rejected():
    bf = fields.ScalarField(np.zeros((5, 5)), 0.5, np.zeros(2))
    with pytest.raises(ValueError):
        plate.solve_dirichlet(plate.identity_coefficients(2), bf)


def test_ellipticity_failure_raises():
    C = plate.identity_coefficients(2)
    # Zero out the tensor: quadratic form collapses, solve must refuse.
    bad = plate.CoefficientTensor(0.0 * C.a, C.b, C.pi0_norm_h)
    bf = fields.ScalarField(np.zeros((17, 17)), 0.125, np.zeros(2))
    with pytest.raises(EllipticityError):
        plate.solve_dirichlet(bad, bf)


def test_difference_operators_match_dense_stencils():
    """Spot check the d_11 operator against a direct second difference."""
    P, h = 17, 0.25
    ops = plate.build_difference_operators(P, 2, h)
    rng = np.random.default_rng(26)
    u = rng.normal(size=(P, P))
    d11 = ops[(0, 0)] @ u.reshape(-1)
    interior = plate.interior_node_mask(P, 2)
    direct = (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / h**2
    assert np.allclose(d11.reshape(-1), direct.reshape(-1), atol=1e-12)
    assert sparse.issparse(ops[(0, 1)])
    assert interior.sum() == (P - 2) ** 2


def test_interior_estimate_diagnostic_runs():
    bf = poly_field(lambda x: x[..., 0] ** 3 - 3.0 * x[..., 0] * x[..., 1] ** 2, 2, 65)
    sol = plate.solve_dirichlet(plate.identity_coefficients(2), bf)
    out = plate.interior_derivative_bound(sol.field, np.zeros(2), 0.3, 0.8)
    assert out["sup_inner"] >= 0.0
    assert out["scaled_outer"] > 0.0
    assert out["ratio"] == pytest.approx(out["sup_inner"] / out["scaled_outer"], rel=1e-12)
