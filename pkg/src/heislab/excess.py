"""Cylindrical excess diagnostics for Legendrian graphs.

The excess of the graph of v inside the cylinder of radius r over a graph
plane (chart A, A = 0 being the horizontal base plane) is

    E = Q * r^{-n} * 1/2 * integral over the preimage of tilt(H, A) * J(H)

where tilt is the squared distance between unit tangent and plane n-vectors
and J = sqrt(det(I + H^2)) is the graph area element. The preimage region
{x : |B_A^T (z(x) - z_c)| < r} with z(x) = (x, Dv(x)) is resolved by the
subcell region quadrature, so the tilt form and the mass-deficit form

    E = Q * r^{-n} * (mass - projected measure)

share points and weights. They then agree to rounding because of the
pointwise identity tilt * J / 2 = J - det(I + H A)/sqrt(det(I + A^2)); the
second deficit form that replaces the projected measure by the exact ball
volume omega_n r^n differs by the quadrature's boundary-cell error and is
reported as a cross-check discrepancy, never silently merged.

Cylinder membership only involves the horizontal coordinates: the
horizontal part of a left translation is the Euclidean difference, so the
gauge cylinder over a plane through the center is exactly the Euclidean
tube used here. Oscillation of the vertical coordinate is measured after
left-translating a support point to the identity, which removes the
plane's own winding.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .constants import SCHEMA_VERSION, STRUCTURE_TOL
from .errors import ChartError, DimensionMismatchError
from .fields import ScalarField
from .graph import jacobian, phi_map, tilt_batch
from .heis import HeisPoint, group_inv, group_mul, plane_basis
from .quadrature import region_quadrature

__all__ = [
    "CylinderSpec",
    "ExcessRecord",
    "ExcessReport",
    "BestPlaneResult",
    "unit_ball_volume",
    "cylindrical_excess",
    "excess_breakdown",
    "best_plane",
    "best_plane_search",
    "height_oscillation",
    "decay_profile",
    "eps_regularity_certificate",
    "rescale_potential",
    "holder_half_seminorm",
]

_FLAT_TOL = 1e-13


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _check_plane(A: np.ndarray, n: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (n, n):
        raise DimensionMismatchError(f"plane chart must be {n}x{n}, got {A.shape}")
    if np.max(np.abs(A - A.T)) > STRUCTURE_TOL * max(1.0, np.max(np.abs(A))):
        raise ChartError("plane chart matrix must be symmetric")
    op = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (A + A.T)))))
    if op > 1.0 + 1e-12:
        raise ChartError(f"plane chart |A| = {op:g} leaves the |A| <= 1 chart")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class CylinderSpec:
    """Cylinder over a graph plane: center point, radius, chart A, multiplicity."""

    center: HeisPoint
    radius: float
    plane: np.ndarray
    multiplicity: int = 1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("cylinder radius must be positive")
        n = self.center.n
        if self.center.x.shape != (n,):
            raise DimensionMismatchError("cylinder center must be a single point")
        object.__setattr__(self, "plane", _check_plane(self.plane, n))
        if int(self.multiplicity) < 1:
            raise ValueError("multiplicity must be a positive integer")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))

    @property
    def n(self) -> int:
        return self.center.n

    def horizontal_center(self) -> np.ndarray:
        return np.concatenate([self.center.x, self.center.y])


def axis_cylinder(v: ScalarField, base_point, radius: float, plane=None) -> CylinderSpec:
    """Cylinder centered at the graph point over base_point (default chart 0)."""
    base_point = np.asarray(base_point, dtype=float).reshape(v.n)
    A = np.zeros((v.n, v.n)) if plane is None else plane
    return CylinderSpec(phi_map(v, base_point), radius, A)


def _preimage_indicator(v: ScalarField, spec: CylinderSpec):
    B, _ = plane_basis(spec.plane)
    zc = spec.horizontal_center()
    r2 = spec.radius * spec.radius

    def ind(pts):
        pts = np.asarray(pts, dtype=float)
        z = np.concatenate([pts, v.interp_grad(pts)], axis=-1)
        proj = np.einsum("ki,...k->...i", B, z - zc)
        return np.einsum("...i,...i->...", proj, proj) < r2

    return ind


def _region_quad(v: ScalarField, spec: CylinderSpec, refine: int):
    return region_quadrature(v, _preimage_indicator(v, spec), refine=refine)


def _tilt_and_jacobians(v: ScalarField, spec: CylinderSpec, pts: np.ndarray):
    H = v.interp_hess(pts)
    J = jacobian(H)
    A = spec.plane
    JA = float(np.sqrt(np.linalg.det(np.eye(spec.n) + A @ A)))
    Jproj = np.linalg.det(np.eye(spec.n) + np.einsum("...ij,jk->...ik", H, A)) / JA
    tilt = 2.0 - 2.0 * Jproj / J
    return tilt, J, Jproj


def cylindrical_excess(v: ScalarField, spec: CylinderSpec, refine: int = 8) -> float:
    """Tilt-integral excess of the graph of v in the cylinder."""
    if v.n != spec.n:
        raise DimensionMismatchError("field and cylinder dimensions differ")
    quad = _region_quad(v, spec, refine)
    tilt, J, _ = _tilt_and_jacobians(v, spec, quad.points)
    val = 0.5 * quad.integrate(tilt * J)
    return spec.multiplicity * float(val) / spec.radius ** spec.n


def excess_breakdown(v: ScalarField, spec: CylinderSpec, refine: int = 8) -> dict:
    """Excess in its three forms plus the analytic-deficit discrepancy.

    tilt_form and deficit_quad share every quadrature point and agree to
    rounding; deficit_analytic replaces the quadrature's projected measure
    by omega_n r^n and so carries the boundary-cell error.
    """
    if v.n != spec.n:
        raise DimensionMismatchError("field and cylinder dimensions differ")
    quad = _region_quad(v, spec, refine)
    tilt, J, Jproj = _tilt_and_jacobians(v, spec, quad.points)
    rn = spec.radius ** spec.n
    Q = spec.multiplicity
    mass = Q * quad.integrate(J)
    projected = Q * quad.integrate(Jproj)
    tilt_form = Q * 0.5 * quad.integrate(tilt * J) / rn
    deficit_quad = (mass - projected) / rn
    deficit_analytic = (mass - Q * unit_ball_volume(spec.n) * rn) / rn
    return {
        "tilt_form": float(tilt_form),
        "deficit_quad": float(deficit_quad),
        "deficit_analytic": float(deficit_analytic),
        "discrepancy": float(abs(tilt_form - deficit_analytic)),
        "mass": float(mass),
        "projected_measure": float(projected),
    }


@dataclass(frozen=True)
class BestPlaneResult:
    A: np.ndarray
    excess: float
    seed: np.ndarray
    seed_excess: float
    converged: bool
    iterations: int


def _sym_param_basis(n: int):
    basis = []
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = 1.0
        basis.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return basis


def _projected_mass_and_grad(v, quad, A, n):
    """N(A) = integral of det(I + H A)/J_A and its gradient over sym A."""
    H = v.interp_hess(quad.points)
    M = np.eye(n) + np.einsum("...ij,jk->...ik", H, A)
    detM = np.linalg.det(M)
    JA = float(np.sqrt(np.linalg.det(np.eye(n) + A @ A)))
    f = detM / JA
    Minv = np.linalg.inv(M)
    MH = np.einsum("...ij,...jk->...ik", Minv, H)
    G = np.einsum("r,rji->ij", f * quad.weights, MH)
    AA_inv_A = np.linalg.solve(np.eye(n) + A @ A, A)
    G -= float(np.sum(f * quad.weights)) * AA_inv_A
    N = float(np.sum(f * quad.weights))
    return N, 0.5 * (G + G.T)


def _clip_chart(A: np.ndarray, limit: float = 0.98) -> np.ndarray:
    w = np.linalg.eigvalsh(A)
    op = float(np.max(np.abs(w)))
    if op > limit:
        A = A * (limit / op)
    return A


def best_plane_search(
    v: ScalarField,
    center,
    r: float,
    refine: int = 8,
    region_refreshes: int = 3,
    max_inner: int = 25,
    tol: float = 1e-11,
) -> BestPlaneResult:
    """Minimize the cylindrical excess over the symmetric plane chart.

    Damped Newton on the projected-mass objective with the exact gradient
    and a finite-difference Hessian over the small symmetric parameter
    space; the preimage region is refreshed a few times as the plane moves.
    Guarantees the reported excess is not worse than the seed's.
    """
    n = v.n
    center = np.asarray(center, dtype=float).reshape(n)

    def spec_for(A, radius=r):
        return axis_cylinder(v, center, radius, plane=A)

    seed_quad = _region_quad(v, spec_for(np.zeros((n, n))), refine)
    Hbar = np.einsum("r,rij->ij", seed_quad.weights, v.interp_hess(seed_quad.points))
    Hbar /= max(float(np.sum(seed_quad.weights)), 1e-300)
    seed = _clip_chart(0.5 * (Hbar + Hbar.T))
    seed_excess = cylindrical_excess(v, spec_for(seed), refine)

    basis = _sym_param_basis(n)
    A = seed.copy()
    iterations = 0
    converged = False
    for _ in range(region_refreshes):
        quad = _region_quad(v, spec_for(A), refine)
        moved = False
        for _ in range(max_inner):
            iterations += 1
            N, G = _projected_mass_and_grad(v, quad, A, n)
            gvec = np.array([float(np.sum(G * E)) for E in basis])
            gsup = float(np.max(np.abs(gvec)))
            if gsup <= tol * max(N, 1.0):
                converged = True
                break
            m = len(basis)
            Hess = np.zeros((m, m))
            dt = 1e-6
            for k, E in enumerate(basis):
                _, Gp = _projected_mass_and_grad(v, quad, _clip_chart(A + dt * E, 1.5), n)
                _, Gm = _projected_mass_and_grad(v, quad, _clip_chart(A - dt * E, 1.5), n)
                col = (Gp - Gm) / (2.0 * dt)
                Hess[:, k] = [float(np.sum(col * F)) for F in basis]
            Hess = 0.5 * (Hess + Hess.T)
            try:
                step_vec = np.linalg.solve(-Hess, gvec)
            except np.linalg.LinAlgError:
                step_vec = gvec / max(np.max(np.abs(Hess)), 1e-300)
            if float(step_vec @ gvec) < 0.0:
                step_vec = gvec * (1.0 / max(gsup, 1e-300))
            step = np.zeros((n, n))
            for k, E in enumerate(basis):
                step += step_vec[k] * E
            t = 1.0
            accepted = False
            while t > 1e-8:
                cand = _clip_chart(A + t * step)
                Nc, _ = _projected_mass_and_grad(v, quad, cand, n)
                if Nc > N:
                    A = cand
                    accepted = True
                    moved = True
                    break
                t *= 0.5
            if not accepted:
                break
        if converged and not moved:
            break
    final_excess = cylindrical_excess(v, spec_for(A), refine)
    if not np.isfinite(final_excess) or final_excess > seed_excess:
        return BestPlaneResult(seed, seed_excess, seed, seed_excess, False, iterations)
    return BestPlaneResult(A, float(final_excess), seed, float(seed_excess), converged, iterations)


def best_plane(v: ScalarField, center, r: float, refine: int = 8) -> np.ndarray:
    """The symmetric chart matrix minimizing the excess at this cylinder."""
    return best_plane_search(v, center, r, refine).A


def _region_nodes(v: ScalarField, spec: CylinderSpec) -> np.ndarray:
    """Derivative-valid grid nodes inside the cylinder preimage."""
    mesh = v.node_mesh()
    inner = (slice(1, -1),) * v.n
    pts = mesh[inner].reshape(-1, v.n)
    ind = _preimage_indicator(v, spec)(pts)
    return pts[ind]


def _set_diameter(vals: np.ndarray) -> float:
    """Exact Euclidean diameter of a modest point set, chunked."""
    m = vals.shape[0]
    if m < 2:
        return 0.0
    best = 0.0
    step = 1024
    for s in range(0, m, step):
        blk = vals[s : s + step]
        d = blk[:, None, :] - vals[None, :, :]
        best = max(best, float(np.max(np.einsum("abk,abk->ab", d, d))))
    return math.sqrt(best)


def height_oscillation(v: ScalarField, spec: CylinderSpec):
    """(q oscillation at half radius, vertical oscillation at quarter radius).

    q is the gradient coordinate of the graph; its oscillation is the
    diameter of the gradient image over nodes in the half-radius cylinder.
    The vertical oscillation is measured at quarter radius after left
    translation by a support point, so planes score exactly zero.
    """
    half = CylinderSpec(spec.center, 0.5 * spec.radius, spec.plane, spec.multiplicity)
    quarter = CylinderSpec(spec.center, 0.25 * spec.radius, spec.plane, spec.multiplicity)
    pts_h = _region_nodes(v, half)
    if pts_h.shape[0] == 0:
        quad = _region_quad(v, half, 2)
        pts_h = quad.points
    q_osc = _set_diameter(v.interp_grad(pts_h))

    pts_q = _region_nodes(v, quarter)
    if pts_q.shape[0] == 0:
        quad = _region_quad(v, quarter, 2)
        pts_q = quad.points
    lifted = phi_map(v, pts_q)
    zc = spec.horizontal_center()
    d2 = np.sum((np.concatenate([lifted.x, lifted.y], axis=-1) - zc) ** 2, axis=-1)
    i0 = int(np.argmin(d2))
    support = HeisPoint(lifted.x[i0], lifted.y[i0], lifted.phi[i0])
    translated = group_mul(group_inv(support), lifted)
    phi_osc = float(np.max(translated.phi) - np.min(translated.phi))
    return float(q_osc), phi_osc


@dataclass(frozen=True)
class ExcessRecord:
    radius: float
    excess_pi0: float
    excess_best: float
    best_plane: np.ndarray
    q_osc: float
    phi_osc: float


@dataclass(frozen=True)
class ExcessReport:
    records: tuple
    fitted_exponent: float
    flags: tuple = ()

    def __post_init__(self):
        radii = [r.radius for r in self.records]
        if any(b >= a for a, b in zip(radii, radii[1:])):
            raise ValueError("record radii must be strictly decreasing")
        for r in self.records:
            if r.excess_pi0 < -1e-10 or r.excess_best < -1e-10:
                raise ValueError("negative excess beyond quadrature tolerance")

    def to_csv(self) -> str:
        buf = io.StringIO()
        n = self.records[0].best_plane.shape[0] if self.records else 0
        cols = ["radius", "excess_pi0", "excess_best"]
        cols += [f"A_{i}{j}" for i in range(n) for j in range(n)]
        cols += ["q_osc", "phi_osc"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for rec in self.records:
            row = [repr(rec.radius), repr(rec.excess_pi0), repr(rec.excess_best)]
            row += [repr(float(x)) for x in rec.best_plane.reshape(-1)]
            row += [repr(rec.q_osc), repr(rec.phi_osc)]
            w.writerow(row)
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "fitted_exponent": self.fitted_exponent,
            "flags": list(self.flags),
            "radii": [r.radius for r in self.records],
            "excess_best": [r.excess_best for r in self.records],
        }


def decay_profile(
    v: ScalarField, radii, center=None, refine: int = 8
) -> ExcessReport:
    """Excess decay records over a strictly decreasing radius sequence.

    Per radius: excess at the base chart, best plane and its excess, and
    the two height oscillations on the base-chart cylinder. The exponent is
    the log-log least squares slope of the best-plane excess; if every
    excess sits at rounding level the profile is flagged flat-exact.
    """
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    n = v.n
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float).reshape(n)
    records = []
    for r in radii:
        spec0 = axis_cylinder(v, center, r)
        e0 = cylindrical_excess(v, spec0, refine)
        bp = best_plane_search(v, center, r, refine)
        qo, po = height_oscillation(v, spec0)
        records.append(
            ExcessRecord(r, max(e0, 0.0), max(bp.excess, 0.0), bp.A, qo, po)
        )
    flags = []
    vals = [rec.excess_best for rec in records]
    if all(e <= _FLAT_TOL for e in vals):
        exponent = float("nan")
        flags.append("flat-exact")
    else:
        lx = np.log(radii)
        ly = np.log(np.maximum(vals, 1e-300))
        exponent = float(np.polyfit(lx, ly, 1)[0])
    return ExcessReport(tuple(records), exponent, tuple(flags))


def holder_half_seminorm(v: ScalarField, center, R: float) -> float:
    """Discrete C^{1/2} seminorm of the Hessian over the half-radius ball.

    Max over node pairs with separation in [2h, R/4] of
    |D2(x) - D2(y)|_F / |x - y|^{1/2}; nearest pairs are excluded because
    they are dominated by stencil noise.
    """
    center = np.asarray(center, dtype=float).reshape(v.n)
    mesh = v.node_mesh()
    inner = (slice(1, -1),) * v.n
    pts = mesh[inner].reshape(-1, v.n)
    keep = np.sum((pts - center) ** 2, axis=-1) <= (0.5 * R) ** 2
    pts = pts[keep]
    H = v.hess[inner].reshape(-1, v.n, v.n)[keep]
    lo, hi = 2.0 * v.spacing, R / 4.0
    if hi <= lo or pts.shape[0] < 2:
        return 0.0
    best = 0.0
    step = 512
    m = pts.shape[0]
    for s in range(0, m, step):
        dp = pts[s : s + step, None, :] - pts[None, :, :]
        dist = np.sqrt(np.einsum("abk,abk->ab", dp, dp))
        mask = (dist >= lo) & (dist <= hi)
        if not np.any(mask):
            continue
        dH = H[s : s + step, None] - H[None, :]
        num = np.sqrt(np.einsum("abij,abij->ab", dH, dH))
        ratio = np.where(mask, num / np.sqrt(np.maximum(dist, 1e-300)), 0.0)
        best = max(best, float(np.max(ratio)))
    return best


def eps_regularity_certificate(v: ScalarField, R: float, center=None, refine: int = 8) -> dict:
    """Scale-normalized graph estimates against the square root of the excess.

    Reports R^{-2} sup|f|, R^{-1} sup|Df|, sup|D2 f| (operator norm), and
    R^{1/2} [D2 f]_{1/2} for f = v minus its first order Taylor part at the
    center, over nodes in the radius-R ball, together with each quantity's
    ratio to sqrt(excess at the base chart).
    """
    n = v.n
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float).reshape(n)
    v0 = float(v.interp_values(center))
    g0 = v.interp_grad(center)
    mesh = v.node_mesh()
    inner = (slice(1, -1),) * n
    pts = mesh[inner].reshape(-1, n)
    keep = np.sum((pts - center) ** 2, axis=-1) <= R * R
    pts = pts[keep]
    fvals = v.values[inner].reshape(-1)[keep] - v0 - (pts - center) @ g0
    gvals = v.grad[inner].reshape(-1, n)[keep] - g0
    Hvals = v.hess[inner].reshape(-1, n, n)[keep]
    sup_f = float(np.max(np.abs(fvals))) if fvals.size else 0.0
    sup_df = float(np.max(np.sqrt(np.einsum("ri,ri->r", gvals, gvals)))) if gvals.size else 0.0
    sup_d2 = float(np.max(np.abs(np.linalg.eigvalsh(Hvals)))) if Hvals.size else 0.0
    semi = holder_half_seminorm(v, center, R)
    excess = cylindrical_excess(v, axis_cylinder(v, center, R), refine)
    rhs = math.sqrt(max(excess, 0.0))
    quantities = {
        "sup_f_scaled": sup_f / (R * R),
        "sup_df_scaled": sup_df / R,
        "sup_d2": sup_d2,
        "holder_scaled": math.sqrt(R) * semi,
    }
    ratios = {}
    for k, q in quantities.items():
        if q == 0.0:
            ratios[k] = 0.0
        elif rhs == 0.0:
            ratios[k] = float("inf")
        else:
            ratios[k] = q / rhs
    return {
        "quantities": quantities,
        "excess": excess,
        "rhs": rhs,
        "ratios": ratios,
    }


def rescale_potential(v: ScalarField, r: float) -> ScalarField:
    """The potential of the graph image under the intrinsic dilation by 1/r.

    v_r(x) = r^{-2} v(r x) on the grid shrunk by r; excess at radius rho of
    the rescaled graph matches excess at radius r * rho of the original.
    """
    if r <= 0:
        raise ValueError("scale must be positive")
    return ScalarField(v.values / (r * r), v.spacing / r, v.origin / r)
