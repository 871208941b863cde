"""Clamped minimization of the nonlinear graph area with a frozen metric.

Objective. For a potential v on the grid box the discrete area is the
Riemann sum over interior nodes of sqrt(det g(H)), where H is the centered
difference Hessian and

    g(H) = P + Q H + (Q H)^T + H R H

with [[P, Q], [Q^T, R]] the blocks of the comparison metric. The two
outermost node layers are clamped; the free nodes are at least two layers
in, so every Hessian stencil a free node influences is complete.

Exact first variation. Writing phi(H) = sqrt(det g) and W = phi/2 * g^{-1},

    d phi = tr(S dH),   S = Q^T W + W Q + W H R + R H W   (symmetric),

so the gradient with respect to a node value is the adjoint difference
operator applied to the nodewise S entries. No numerical differencing is
involved anywhere in the gradient.

Exact second variation. With C = Q + H R and L(sigma) = C sigma + (C sigma)^T,

    d2 phi(s, t) = tr(S s) tr(S t)/phi
                 - phi/2 * tr(g^{-1} L(s) g^{-1} L(t))
                 + phi/2 * tr(g^{-1} (s R t + t R s)),

assembled into a sparse matrix through the same difference operators with
nodewise coefficients. At v = 0 with the identity metric this matrix equals
the plate stiffness exactly, which is why the plate solution makes a good
initial iterate: it is the critical point of the quadratic model.

Derivation note (stationarity in coordinates). Differentiating the Gram
determinant gives the divergence-form equation sum_ij D_ij S_ij(D^2 v) = 0
at the free nodes; expanding S around H = 0 shows the linear part is the
constant-coefficient plate operator and the remainder is cubic in H. The
closed forms above are checked against central finite differences of the
discrete area in the test suite.

Fields with constant Hessian make S constant, and the adjoint stencils
annihilate constants at free nodes, so every quadratic potential is an
exact critical point of the discrete functional for any admissible metric
with block Q = 0, and of the full gradient restricted to free nodes in
general.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatchError, MetricError
from .fields import ScalarField
from .graph import metric_blocks
from .plate import (
    build_difference_operators,
    compute_coefficients,
    free_node_mask,
    solve_dirichlet,
    _sym_pairs,
)
from .wedge import MetricForm

__all__ = [
    "MinimizeProblem",
    "MinimizeResult",
    "box_area",
    "first_variation",
    "stationarity_norm",
    "second_variation_matrix",
    "minimize",
    "linearization_gap",
    "GapReport",
]

_CHUNK = 1 << 16


def _interior_hessians(v: ScalarField) -> np.ndarray:
    core = (slice(1, -1),) * v.n
    return v.hess[core].reshape(-1, v.n, v.n)


def _gram_batch(Pb, Qb, Rb, H):
    QH = np.einsum("ij,rjk->rik", Qb, H)
    HRH = np.einsum("rij,jk,rkl->ril", H, Rb, H)
    return Pb[None] + QH + QH.transpose(0, 2, 1) + HRH


def _phi_and_inverse(g):
    det = np.linalg.det(g)
    if np.any(det <= 0.0):
        raise MetricError("graph Gram determinant is not positive; Hessian too large")
    return np.sqrt(det), np.linalg.inv(g)


def box_area(metric, v: ScalarField) -> float:
    """Riemann-sum area of the graph of v over the open grid box."""
    Pb, Qb, Rb = metric_blocks(metric, v.n)
    H = _interior_hessians(v)
    phi, _ = _phi_and_inverse(_gram_batch(Pb, Qb, Rb, H))
    return float(np.sum(phi) * v.spacing ** v.n)


def _shape_tensor(Pb, Qb, Rb, H):
    """phi, g^{-1}, and the nodewise derivative S of phi(H)."""
    g = _gram_batch(Pb, Qb, Rb, H)
    phi, G1 = _phi_and_inverse(g)
    W = 0.5 * phi[:, None, None] * G1
    WQ = np.einsum("rij,jk->rik", W, Qb)
    WHR = np.einsum("rij,rjk,kl->ril", W, H, Rb)
    S = WQ.transpose(0, 2, 1) + WQ + WHR + WHR.transpose(0, 2, 1)
    return phi, G1, S


def first_variation(metric, v: ScalarField) -> ScalarField:
    """Exact gradient of the box area with respect to every node value.

    The restriction to free nodes (two layers in) is the stationarity
    residual of the clamped problem; entries on the outer layers are the
    sensitivities to the clamped data.
    """
    n = v.n
    Pb, Qb, Rb = metric_blocks(metric, n)
    H = _interior_hessians(v)
    _, _, S = _shape_tensor(Pb, Qb, Rb, H)
    ops = build_difference_operators(v.points, n, v.spacing)
    gvec = np.zeros(v.points ** n)
    for (i, j), D in ops.items():
        mult = 1.0 if i == j else 2.0
        gvec += mult * (D.T @ S[:, i, j])
    gvec *= v.spacing ** n
    return ScalarField(gvec.reshape((v.points,) * n), v.spacing, v.origin)


def stationarity_norm(metric, v: ScalarField) -> float:
    """Sup norm of the first variation over the free nodes."""
    g = first_variation(metric, v).values.reshape(-1)
    return float(np.max(np.abs(g[free_node_mask(v.points, v.n)])))


def _second_variation_coeffs(Pb, Qb, Rb, H):
    """Nodewise tensor A with d2 phi(s, t) = A[i,j,k,l] s_ij t_kl."""
    m, n = H.shape[0], H.shape[1]
    phi, G1, S = _shape_tensor(Pb, Qb, Rb, H)
    C = Qb[None] + np.einsum("rij,jk->rik", H, Rb)
    F = np.einsum("rab,rbc->rac", G1, C)
    Ft = F.transpose(0, 2, 1)
    CtG1C = np.einsum("rba,rbc->rac", C, F)
    A = np.einsum("r,rij,rkl->rijkl", 1.0 / phi, S, S)
    mid = (
        np.einsum("rli,rjk->rijkl", F, F)
        + np.einsum("rli,rjk->rijkl", CtG1C, G1)
        + np.einsum("rli,rjk->rijkl", G1, CtG1C)
        + np.einsum("rli,rjk->rijkl", Ft, Ft)
    )
    A -= 0.5 * phi[:, None, None, None, None] * mid
    A += (
        0.5
        * phi[:, None, None, None, None]
        * (np.einsum("rli,jk->rijkl", G1, Rb) + np.einsum("rjk,li->rijkl", G1, Rb))
    )
    return A


def second_variation_matrix(metric, v: ScalarField) -> sp.csr_matrix:
    """Sparse Hessian of the box area over all node values."""
    n = v.n
    Pb, Qb, Rb = metric_blocks(metric, n)
    H = _interior_hessians(v)
    m = H.shape[0]
    pairs = _sym_pairs(n)
    npairs = len(pairs)
    c = np.zeros((npairs, npairs, m))
    for start in range(0, m, _CHUNK):
        sl = slice(start, min(start + _CHUNK, m))
        A = _second_variation_coeffs(Pb, Qb, Rb, H[sl])
        for p, (i, j) in enumerate(pairs):
            for q, (k, l) in enumerate(pairs):
                total = np.zeros(A.shape[0])
                for ii, jj in {(i, j), (j, i)}:
                    for kk, ll in {(k, l), (l, k)}:
                        total += A[:, ii, jj, kk, ll]
                c[p, q, sl] = total
    ops = build_difference_operators(v.points, n, v.spacing)
    hn = v.spacing ** n
    K = None
    for p, ij in enumerate(pairs):
        for q, kl in enumerate(pairs):
            term = (ops[ij].T @ sp.diags(c[p, q]) @ ops[kl]) * hn
            K = term if K is None else K + term
    K = 0.5 * (K + K.T)
    return K.tocsr()


@dataclass(frozen=True)
class MinimizeProblem:
    metric: MetricForm
    boundary_field: ScalarField
    max_iterations: int = 30
    grad_tol: float = 1e-9
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12

    def __post_init__(self):
        if not np.all(np.isfinite(self.boundary_field.values)):
            raise DimensionMismatchError("boundary field must be finite")
        if self.metric.n != self.boundary_field.n:
            raise DimensionMismatchError("metric and boundary field dimensions differ")


@dataclass(frozen=True)
class MinimizeResult:
    v_star: ScalarField
    final_area: float
    first_variation_norm: float
    iterations: int
    converged: bool
    flags: tuple = ()
    area_history: tuple = ()
    initial_area: float = float("nan")

    def to_json_dict(self) -> dict:
        return {
            "final_area": self.final_area,
            "first_variation_norm": self.first_variation_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "flags": list(self.flags),
            "area_history": list(self.area_history),
            "initial_area": self.initial_area,
        }


def _hessian_opnorm_sup(v: ScalarField) -> float:
    H = _interior_hessians(v)
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))


def minimize(problem: MinimizeProblem) -> MinimizeResult:
    """Damped Newton with Armijo line search on the clamped discrete area.

    Starts from the plate solution for the same boundary data. Falls back
    to a gradient step whenever the Newton direction is unavailable or not
    a descent direction. Non-convergence is reported on the result, not
    raised; ellipticity failure of the metric's plate tensor is raised.
    """
    metric = problem.metric
    bf = problem.boundary_field
    n, Pn, h = bf.n, bf.points, bf.spacing
    coeffs = compute_coefficients(metric, n)
    plate = solve_dirichlet(coeffs, bf)
    u = plate.field.values.reshape(-1).copy()
    free = free_node_mask(Pn, n)
    flags = []

    def make_field(vec):
        return ScalarField(vec.reshape((Pn,) * n), h, bf.origin)

    current = make_field(u)
    area = box_area(metric, current)
    initial_area = area
    history = [area]
    gnorm = np.inf
    it = 0
    converged = False

    for it in range(1, problem.max_iterations + 1):
        gfield = first_variation(metric, current)
        gfree = gfield.values.reshape(-1)[free]
        gnorm = float(np.max(np.abs(gfree)))
        if gnorm <= problem.grad_tol:
            converged = True
            it -= 1
            break

        direction = None
        try:
            K = second_variation_matrix(metric, current)
            Aff = K[free][:, free].tocsc()
            d = spla.splu(Aff).solve(-gfree)
            if np.all(np.isfinite(d)) and float(gfree @ d) < 0.0:
                direction = d
            else:
                flags.append("newton_not_descent")
        except (RuntimeError, MetricError):
            flags.append("newton_solve_failed")
        if direction is None:
            scale = 1.0 / max(np.max(np.abs(gfree)), 1e-300)
            direction = -gfree * min(scale, 1.0 / h ** n)

        slope = float(gfree @ direction)
        t = 1.0
        accepted = False
        while t >= problem.min_step:
            trial = u.copy()
            trial[free] += t * direction
            try:
                trial_field = make_field(trial)
                trial_area = box_area(metric, trial_field)
            except MetricError:
                t *= problem.backtrack
                continue
            if trial_area <= area + problem.armijo_c * t * slope:
                u, current, area = trial, trial_field, trial_area
                history.append(area)
                accepted = True
                break
            t *= problem.backtrack
        if not accepted:
            flags.append("line_search_stalled")
            break
    else:
        it = problem.max_iterations

    if not converged:
        gnorm = stationarity_norm(metric, current)
        converged = gnorm <= problem.grad_tol
    if _hessian_opnorm_sup(current) > 0.9:
        flags.append("outside_convexity_guard")
    if not converged and "line_search_stalled" not in flags:
        flags.append("max_iterations_reached")
    return MinimizeResult(
        v_star=current,
        final_area=area,
        first_variation_norm=gnorm,
        iterations=it,
        converged=converged,
        flags=tuple(dict.fromkeys(flags)),
        area_history=tuple(history),
        initial_area=initial_area,
    )


def _hessian_l2(v: ScalarField) -> float:
    H = _interior_hessians(v)
    return float(np.sqrt(np.sum(H * H) * v.spacing ** v.n))


@dataclass(frozen=True)
class GapReport:
    records: tuple
    slope: float

    def to_json_dict(self) -> dict:
        return {"records": [dict(r) for r in self.records], "slope": self.slope}


def linearization_gap(metric, scales, base_field: ScalarField, **options) -> GapReport:
    """Relative Hessian distance between the area minimizer and its plate model.

    For each scale eps, solves the plate problem and the nonlinear problem
    with boundary data eps * base_field and records
    ||D2(v* - u)||_L2 / ||D2 u||_L2. The slope is the log-log least squares
    fit over the scales with nonzero data.
    """
    coeffs = compute_coefficients(metric, base_field.n)
    records = []
    for eps in scales:
        bd = ScalarField(base_field.values * float(eps), base_field.spacing, base_field.origin)
        plate = solve_dirichlet(coeffs, bd)
        res = minimize(MinimizeProblem(metric, bd, **options))
        diff = ScalarField(
            res.v_star.values - plate.field.values, bd.spacing, bd.origin
        )
        num = _hessian_l2(diff)
        den = _hessian_l2(plate.field)
        ratio = 0.0 if den == 0.0 and num == 0.0 else num / den
        records.append(
            {
                "eps": float(eps),
                "ratio": ratio,
                "plate_hess_l2": den,
                "minimizer_area": res.final_area,
                "converged": res.converged,
            }
        )
    pts = [(r["eps"], r["ratio"]) for r in records if r["eps"] > 0 and r["ratio"] > 0]
    if len(pts) >= 2:
        lx = np.log([p[0] for p in pts])
        ly = np.log([p[1] for p in pts])
        slope = float(np.polyfit(lx, ly, 1)[0])
    else:
        slope = float("nan")
    return GapReport(tuple(records), slope)
