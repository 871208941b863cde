"""Heisenberg group kernels in exponential coordinates.

Points of the (2n+1)-dimensional Heisenberg group are written (x, y, phi)
with x, y in R^n and phi in R. All kernels in this module are elementary
closed forms:

    product     (x,y,phi) * (x',y',phi') = (x+x', y+y', phi+phi' + (x.y' - y.x')/2)
    inverse     (x,y,phi)^-1 = (-x, -y, -phi)
    contact     theta = dphi - (x.dy - y.dx)/2
    frame       X_i = d/dx_i - (y_i/2) d/dphi,   Y_i = d/dy_i + (x_i/2) d/dphi
    gauge       tau(x,y,phi) = (|z|^4 + 16 phi^2)^(1/4),  z = x + i y
    dilation    delta_r(z, phi) = (r z, r^2 phi)
    distance    d(p, q) = tau(p^-1 * q)

The gauge satisfies the triangle inequality for the group product, scales
exactly linearly under dilations, and has horizontal gradient norm
|z|/tau <= 1 away from the identity. The 2n frame vectors X_i, Y_i span the
kernel of the contact form at every point and are declared orthonormal; all
wedge-level computations elsewhere in the package are written in this frame.

Everything is vectorized: a HeisPoint may carry arbitrary leading batch
axes, and kernels broadcast like numpy ufuncs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import UNITARY_TOL
from .errors import DimensionMismatchError, GaugeOriginError, NonUnitaryError

__all__ = [
    "HeisPoint",
    "TangentVector",
    "identity",
    "group_mul",
    "group_inv",
    "fk_gauge",
    "fk_dist",
    "dilate",
    "contact_eval",
    "horizontal_frame",
    "hgrad_tau",
    "unitary_act",
    "project_p",
    "project_q",
    "project_pi",
    "plane_basis",
    "plane_project_p",
    "plane_project_q",
    "plane_offset_norm",
]


@dataclass(frozen=True)
class HeisPoint:
    """A batch of group elements: x, y have shape (..., n), phi has shape (...)."""

    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if x.ndim < 1 or y.ndim < 1:
            raise DimensionMismatchError("x and y need at least one axis (the coordinate axis)")
        if x.shape[-1] != y.shape[-1]:
            raise DimensionMismatchError(
                f"x has n={x.shape[-1]} but y has n={y.shape[-1]}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.x.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return np.broadcast_shapes(self.x.shape[:-1], self.y.shape[:-1], self.phi.shape)


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector (u, v, w) in coordinate components d/dx, d/dy, d/dphi."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))

    @property
    def n(self) -> int:
        return self.u.shape[-1]


def _check_same_n(a, b, what):
    if a.n != b.n:
        raise DimensionMismatchError(f"{what}: n={a.n} vs n={b.n}")


def identity(n: int, batch_shape: tuple = ()) -> HeisPoint:
    """The group identity, optionally replicated over a batch shape."""
    z = np.zeros(batch_shape + (n,))
    return HeisPoint(z, z.copy(), np.zeros(batch_shape))


def group_mul(p: HeisPoint, q: HeisPoint) -> HeisPoint:
    """Group product. The phi twist is the symplectic area (x.y' - y.x')/2."""
    _check_same_n(p, q, "group_mul")
    twist = 0.5 * (
        np.einsum("...i,...i->...", p.x, q.y) - np.einsum("...i,...i->...", p.y, q.x)
    )
    return HeisPoint(p.x + q.x, p.y + q.y, p.phi + q.phi + twist)


def group_inv(p: HeisPoint) -> HeisPoint:
    """Group inverse: negate every coordinate."""
    return HeisPoint(-p.x, -p.y, -p.phi)


def fk_gauge(p: HeisPoint) -> np.ndarray:
    """Homogeneous gauge (|z|^4 + 16 phi^2)^(1/4).

    Subadditive for the group product and exactly 1-homogeneous under
    dilations. Returns an array over the batch shape.
    """
    z2 = np.einsum("...i,...i->...", p.x, p.x) + np.einsum("...i,...i->...", p.y, p.y)
    return (z2 * z2 + 16.0 * p.phi * p.phi) ** 0.25


def fk_dist(p: HeisPoint, q: HeisPoint) -> np.ndarray:
    """Left-invariant gauge distance d(p, q) = tau(p^-1 q)."""
    return fk_gauge(group_mul(group_inv(p), q))


def dilate(r, p: HeisPoint) -> HeisPoint:
    """Anisotropic dilation delta_r: z -> r z, phi -> r^2 phi, for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("dilation factor must be positive")
    rz = r[..., None] if r.ndim else r
    return HeisPoint(rz * p.x, rz * p.y, r * r * p.phi)


def contact_eval(p: HeisPoint, t: TangentVector) -> np.ndarray:
    """Evaluate the contact form at p on the tangent vector t.

    theta_p(u, v, w) = w - (x.v - y.u)/2. Horizontal vectors give zero.
    """
    if p.n != t.n:
        raise DimensionMismatchError(f"contact_eval: point n={p.n} vs vector n={t.n}")
    return t.w - 0.5 * (
        np.einsum("...i,...i->...", p.x, t.v) - np.einsum("...i,...i->...", p.y, t.u)
    )


def horizontal_frame(p: HeisPoint) -> TangentVector:
    """The 2n horizontal frame vectors at p, stacked along a new leading axis.

    Index k < n is X_k = (e_k, 0, -y_k/2); index n + k is Y_k = (0, e_k, x_k/2).
    The returned TangentVector has arrays of shape (2n,) + batch + (n,).
    """
    n = p.n
    shape = p.batch_shape
    x = np.broadcast_to(p.x, shape + (n,))
    y = np.broadcast_to(p.y, shape + (n,))
    eye = np.eye(n).reshape((n,) + (1,) * len(shape) + (n,))
    zeros = np.zeros((n,) + shape + (n,))
    ex = np.broadcast_to(eye, (n,) + shape + (n,))
    u = np.concatenate([ex, zeros], axis=0)
    v = np.concatenate([zeros, ex], axis=0)
    wx = -0.5 * np.moveaxis(y, -1, 0)
    wy = 0.5 * np.moveaxis(x, -1, 0)
    w = np.concatenate([wx, wy], axis=0)
    return TangentVector(u, v, w)


def hgrad_tau(p: HeisPoint) -> np.ndarray:
    """Norm of the horizontal gradient of the gauge, |z|/tau.

    Undefined at the identity; raises GaugeOriginError if any batch element
    sits there. Always in [0, 1] elsewhere.
    """
    tau = fk_gauge(p)
    if np.any(tau == 0.0):
        raise GaugeOriginError("horizontal gauge gradient is undefined at the identity")
    z = np.sqrt(
        np.einsum("...i,...i->...", p.x, p.x) + np.einsum("...i,...i->...", p.y, p.y)
    )
    return z / tau


def unitary_act(U: np.ndarray, p: HeisPoint) -> HeisPoint:
    """Apply the unitary z -> U z on the horizontal slice, fixing phi.

    U must be n x n complex with ||U* U - I||_max below the unitarity
    tolerance. The action is a group automorphism and preserves the gauge.
    """
    U = np.asarray(U, dtype=complex)
    n = p.n
    if U.shape != (n, n):
        raise DimensionMismatchError(f"unitary_act: U is {U.shape}, point has n={n}")
    if np.max(np.abs(U.conj().T @ U - np.eye(n))) > UNITARY_TOL:
        raise NonUnitaryError("matrix fails the unitarity check")
    z = p.x + 1j * p.y
    uz = np.einsum("ij,...j->...i", U, z)
    return HeisPoint(uz.real, uz.imag, p.phi)


def project_p(p: HeisPoint) -> np.ndarray:
    """Projection onto the x block (a group homomorphism to R^n)."""
    return p.x


def project_q(p: HeisPoint) -> np.ndarray:
    """Projection onto the y block (a group homomorphism to R^n)."""
    return p.y


def project_pi(p: HeisPoint) -> np.ndarray:
    """Projection onto the horizontal slice R^2n, dropping phi."""
    return np.concatenate([np.broadcast_to(p.x, p.batch_shape + (p.n,)),
                           np.broadcast_to(p.y, p.batch_shape + (p.n,))], axis=-1)


def _plane_inv_sqrt(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError("plane parameter A must be a square matrix")
    if np.max(np.abs(A - A.T)) > 1e-12:
        raise ValueError("plane parameter A must be symmetric")
    w, V = np.linalg.eigh(A @ A)
    return (V * (1.0 / np.sqrt(1.0 + w))) @ V.T


def plane_basis(A: np.ndarray):
    """Orthonormal bases of the Lagrangian graph plane {(xi, A xi)} and its complement.

    Returns (B, Bperp), both 2n x n with orthonormal columns: B spans the
    plane, Bperp its Euclidean orthogonal complement in R^2n. Columns are
    [I; A] and [-A; I] times (I + A^2)^(-1/2), which is exact because
    [I; A]^T [I; A] = I + A^2 for symmetric A.
    """
    A = np.asarray(A, dtype=float)
    S = _plane_inv_sqrt(A)
    top = S
    bottom = A @ S
    B = np.concatenate([top, bottom], axis=0)
    Bperp = np.concatenate([-bottom, top], axis=0)
    return B, Bperp


def plane_project_p(A: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Coordinates of the projection of zeta in R^2n onto the plane chart A."""
    B, _ = plane_basis(A)
    return np.einsum("ki,...k->...i", B, np.asarray(zeta, dtype=float))


def plane_project_q(A: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Coordinates of the projection of zeta onto the complement of the plane chart A."""
    _, Bp = plane_basis(A)
    return np.einsum("ki,...k->...i", Bp, np.asarray(zeta, dtype=float))


def plane_offset_norm(A0: np.ndarray, A1: np.ndarray) -> float:
    """Operator norm of the difference of the two plane projections p^A1 - p^A0.

    Measures how far apart two graph-plane charts are as maps R^2n -> R^n.
    """
    B0, _ = plane_basis(A0)
    B1, _ = plane_basis(A1)
    return float(np.linalg.norm(B1.T - B0.T, ord=2))
