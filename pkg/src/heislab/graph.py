"""Legendrian graphs over horizontal planes and their areas.

A potential v on a grid box K lifts to the Legendrian graph map

    Phi(x) = ( x, Dv(x), x . Dv(x)/2 - v(x) ),

whose image is an n-dimensional Legendrian surface. The graph frame is the
discrete derivative of the discrete lift: differentiating the stored node
fields of the three map components. In exact arithmetic the frame vectors
are X_i + sum_j (D^2 v)_ij Y_j and annihilate the contact form; with
centered differences the contact residual measures pure stencil
inconsistency, vanishes identically for quadratic potentials, and decays at
second order in the spacing for smooth ones.

Areas are Gram determinant integrals over ball regions,

    area_h = integral of sqrt(det h(DPhi e_i, DPhi e_j)) ,

with the standard-metric special case area = integral of
sqrt(det(I + (D^2 v)^2)). The two are separate code paths on purpose: area
never touches the metric machinery, so area_h(identity) == area is a real
cross-check, not a tautology.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, GridRegionError
from .fields import ScalarField, gradient_nodes, multilinear
from .heis import HeisPoint, TangentVector, contact_eval
from .quadrature import ball_indicator, region_quadrature
from .wedge import MetricForm, SimpleNVector, graph_plane_nvector, nvector_inner

__all__ = [
    "phi_map",
    "height_nodes",
    "graph_frame",
    "contact_residual",
    "jacobian",
    "area",
    "area_h",
    "tangent_nvector",
    "tilt_point",
    "tilt_batch",
    "metric_blocks",
    "gram_from_hessian",
]


def height_nodes(v: ScalarField) -> np.ndarray:
    """Node values of the lift height f = x . Dv / 2 - v (NaN on the outer layer)."""
    g = v.grad
    mesh = v.node_mesh()
    return 0.5 * np.einsum("...i,...i->...", mesh, g) - v.values


def _wide_hessian_nodes(v: ScalarField) -> np.ndarray:
    """Jacobian of the gradient field, entry [..., j, i] = D_i g_j.

    This is the Hessian seen by the discrete lift derivative. It is exactly
    symmetric because centered difference operators commute, and it is two
    node layers in from the box edge.
    """
    rows = [gradient_nodes(v.grad[..., j], v.spacing) for j in range(v.n)]
    return np.stack(rows, axis=-2)


def phi_map(v: ScalarField, pts: np.ndarray) -> HeisPoint:
    """Lift base points to the graph: (x, Dv(x), x.Dv(x)/2 - v(x))."""
    pts = np.asarray(pts, dtype=float)
    g = v.interp_grad(pts)
    val = v.interp_values(pts)
    phi = 0.5 * np.einsum("...i,...i->...", pts, g) - val
    return HeisPoint(pts, g, phi)


def graph_frame(v: ScalarField, pts: np.ndarray) -> TangentVector:
    """The n frame vectors of the lift at pts, stacked on a new leading axis.

    Components are discrete derivatives of the stored map fields, so
    contact_eval(phi_map(v, x), frame) returns the stencil residual rather
    than an exact zero.
    """
    pts = np.asarray(pts, dtype=float)
    n = v.n
    v._check_inner(pts, margin=2.0)
    first = v.origin - v.extent
    wideH = multilinear(_wide_hessian_nodes(v), first, v.spacing, pts)
    fgrad = multilinear(
        gradient_nodes(height_nodes(v), v.spacing), first, v.spacing, pts
    )
    batch = pts.shape[:-1]
    eye = np.broadcast_to(
        np.eye(n).reshape((n,) + (1,) * len(batch) + (n,)), (n,) + batch + (n,)
    )
    vcomp = np.moveaxis(wideH, -1, 0)
    wcomp = np.moveaxis(fgrad, -1, 0)
    return TangentVector(eye, vcomp, wcomp)


def contact_residual(v: ScalarField) -> float:
    """Max contact-form value over all frame vectors at all valid nodes.

    Zero to rounding for potentials of degree <= 2; O(spacing^2) otherwise.
    """
    n = v.n
    mesh = v.node_mesh()
    g = v.grad
    f = height_nodes(v)
    p = HeisPoint(mesh, g, f)
    wideH = _wide_hessian_nodes(v)
    fgrad = gradient_nodes(f, v.spacing)
    batch = mesh.shape[:-1]
    eye = np.broadcast_to(
        np.eye(n).reshape((n,) + (1,) * len(batch) + (n,)), (n,) + batch + (n,)
    )
    frame = TangentVector(eye, np.moveaxis(wideH, -1, 0), np.moveaxis(fgrad, -1, 0))
    res = contact_eval(p, frame)
    if np.all(np.isnan(res)):
        raise GridRegionError("grid too small for the frame stencils")
    return float(np.nanmax(np.abs(res)))


def jacobian(H: np.ndarray) -> np.ndarray:
    """Area Jacobian sqrt(det(I + H^2)) for a batch of symmetric matrices."""
    H = np.asarray(H, dtype=float)
    n = H.shape[-1]
    M = np.eye(n) + np.einsum("...ij,...jk->...ik", H, H)
    return np.sqrt(np.linalg.det(M))


def metric_blocks(metric, n: int):
    """Split a metric into frame blocks (P, Q, R); identity when metric is None."""
    if metric is None:
        return np.eye(n), np.zeros((n, n)), np.eye(n)
    if isinstance(metric, MetricForm):
        Hm = metric.matrix
    else:
        Hm = np.asarray(metric, dtype=float)
    if Hm.shape != (2 * n, 2 * n):
        raise DimensionMismatchError("metric size does not match grid dimension")
    return Hm[:n, :n], Hm[:n, n:], Hm[n:, n:]


def gram_from_hessian(H: np.ndarray, blocks) -> np.ndarray:
    """Gram matrix h(DPhi e_i, DPhi e_j) = P + QH + (QH)^T + H R H, batched."""
    Pm, Qm, Rm = blocks
    QH = np.einsum("ij,...jk->...ik", Qm, H)
    HRH = np.einsum("...ij,jk,...kl->...il", H, Rm, H)
    return Pm + QH + np.swapaxes(QH, -1, -2) + HRH


def _ball_quad(v: ScalarField, center, radius: float, refine: int):
    center = np.asarray(center, dtype=float).reshape(v.n)
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    return region_quadrature(v, ball_indicator(center, radius), refine=refine)


def area(v: ScalarField, center, radius: float, refine: int = 2) -> float:
    """Standard-metric graph area over the ball B(center, radius) in the base."""
    quad = _ball_quad(v, center, radius, refine)
    H = v.interp_hess(quad.points)
    return quad.integrate(jacobian(H))


def area_h(v: ScalarField, metric, center, radius: float, refine: int = 2) -> float:
    """Graph area under a constant comparison metric, via frame Gram determinants."""
    quad = _ball_quad(v, center, radius, refine)
    H = v.interp_hess(quad.points)
    gram = gram_from_hessian(H, metric_blocks(metric, v.n))
    det = np.linalg.det(gram)
    if np.any(det <= 0.0):
        raise ValueError("metric Gram determinant not positive on the region")
    return quad.integrate(np.sqrt(det))


def tangent_nvector(v: ScalarField, x: np.ndarray) -> SimpleNVector:
    """Unit tangent n-vector of the graph at one base point (reference route)."""
    x = np.asarray(x, dtype=float).reshape(v.n)
    H = v.interp_hess(x)
    J = float(jacobian(H))
    factors = np.concatenate([np.eye(v.n), H], axis=1)
    return SimpleNVector(factors).scaled(1.0 / J)


def tilt_point(v: ScalarField, x: np.ndarray, A: np.ndarray) -> float:
    """|T(x) - pi_A|^2 by polarization of Gram inner products (reference route)."""
    T = tangent_nvector(v, x)
    piA = graph_plane_nvector(np.asarray(A, dtype=float))
    eye = np.eye(2 * v.n)
    return (
        nvector_inner(eye, T, T)
        - 2.0 * nvector_inner(eye, T, piA)
        + nvector_inner(eye, piA, piA)
    )


def tilt_batch(H: np.ndarray, A: np.ndarray) -> np.ndarray:
    """|T - pi_A|^2 for a batch of graph Hessians (fast closed-form route).

    Uses <Phi_# pi_0, Phi^A_# pi_0> = det(I + H A) together with the unit
    normalizations, so tilt = 2 - 2 det(I + H A) / (J(H) J(A)).
    """
    H = np.asarray(H, dtype=float)
    A = np.asarray(A, dtype=float)
    n = H.shape[-1]
    M = np.eye(n) + np.einsum("...ij,jk->...ik", H, A)
    JA = float(np.sqrt(np.linalg.det(np.eye(n) + A @ A)))
    return 2.0 - 2.0 * np.linalg.det(M) / (jacobian(H) * JA)
