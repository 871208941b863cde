"""Fourth order constant-coefficient plate problems with clamped data.

The coefficient tensor comes from the comparison metric through wedge
inner products of the deformed coordinate n-vectors:

    atilde[i,j,k,l] = h0(pi_i^j, pi_k^l)
    b[i,j]          = h0(pi_0,   pi_i^j)
    a = atilde - (b tensor b) / |pi_0|_h0^2

For the identity metric a[i,j,k,l] = delta_ik delta_jl and the operator is
the bilaplacian. Ellipticity is the smallest eigenvalue of a acting on
symmetric matrices; the solver refuses tensors whose smallest eigenvalue
falls below the cutoff rather than regularizing them.

The discrete problem minimizes the quadrature energy

    E(u) = h^n * sum over interior nodes of a[i,j,k,l] (D_ij u)(D_kl u)

with centered difference Hessian stencils, subject to the two outermost
node layers being clamped to the boundary field (trace plus normal
derivative). The resulting linear system is symmetric positive definite on
the free nodes because the energy annihilates exactly the affine fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import ELLIPTICITY_CUTOFF, LINSOLVE_TOL, SCHEMA_VERSION
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    EllipticityError,
    SingularSystemError,
)
from .fields import ScalarField
from .quadrature import ball_indicator, region_quadrature
from .wedge import MetricForm, basis_pi0, basis_pij, nvector_inner

__all__ = [
    "CoefficientTensor",
    "PlateSolution",
    "compute_coefficients",
    "check_ellipticity",
    "identity_coefficients",
    "energy",
    "solve_dirichlet",
    "build_difference_operators",
    "interior_node_mask",
    "free_node_mask",
    "interior_derivative_bound",
    "boundary_gradient_ratio",
]

_DIRECT_SOLVE_LIMIT = 120_000


@dataclass(frozen=True)
class CoefficientTensor:
    """Constant coefficients a[i,j,k,l] of the fourth order operator, plus b."""

    a: np.ndarray
    b: np.ndarray
    pi0_norm_h: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n, n, n):
            raise DimensionMismatchError(f"coefficient array must be (n,n,n,n), got {a.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(n, n))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def as_matrix(self) -> np.ndarray:
        """Row-major n^2 x n^2 matrix M[i*n+j, k*n+l] = a[i,j,k,l]."""
        n = self.n
        return self.a.reshape(n * n, n * n)

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "n": self.n,
            "a": self.as_matrix().tolist(),
            "b": self.b.tolist(),
            "pi0_norm_h": self.pi0_norm_h,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CoefficientTensor":
        n = int(d["n"])
        a = np.asarray(d["a"], dtype=float).reshape(n, n, n, n)
        return cls(a, np.asarray(d["b"], dtype=float), float(d["pi0_norm_h"]))


def compute_coefficients(metric, n: int) -> CoefficientTensor:
    """Assemble the plate coefficients of a constant metric in dimension n."""
    if isinstance(metric, MetricForm):
        Hm = metric.matrix
    else:
        Hm = np.asarray(metric, dtype=float)
    if Hm.shape != (2 * n, 2 * n):
        raise DimensionMismatchError("metric size does not match requested dimension")
    pi0 = basis_pi0(n)
    pij = [[basis_pij(n, i, j) for j in range(n)] for i in range(n)]
    atilde = np.zeros((n, n, n, n))
    b = np.zeros((n, n))
    for i, j, k, l in itertools.product(range(n), repeat=4):
        atilde[i, j, k, l] = nvector_inner(Hm, pij[i][j], pij[k][l])
    for i, j in itertools.product(range(n), repeat=2):
        b[i, j] = nvector_inner(Hm, pi0, pij[i][j])
    pi0sq = nvector_inner(Hm, pi0, pi0)
    a = atilde - np.einsum("ij,kl->ijkl", b, b) / pi0sq
    return CoefficientTensor(a, b, float(np.sqrt(pi0sq)))


def identity_coefficients(n: int) -> CoefficientTensor:
    return compute_coefficients(np.eye(2 * n), n)


def _sym_basis(n: int):
    basis = []
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = 1.0
        basis.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(E)
    return basis


def check_ellipticity(coeffs: CoefficientTensor) -> float:
    """Smallest eigenvalue of sigma -> a[sigma, sigma] on symmetric matrices."""
    basis = _sym_basis(coeffs.n)
    m = len(basis)
    M = np.zeros((m, m))
    for p in range(m):
        for q in range(m):
            M[p, q] = np.einsum("ijkl,ij,kl->", coeffs.a, basis[p], basis[q])
    M = 0.5 * (M + M.T)
    return float(np.linalg.eigvalsh(M)[0])


def _stencil_1d(P: int, h: float, order: int) -> sp.csr_matrix:
    """1D centered stencil on P nodes; rows at the two end nodes stay zero."""
    rows, cols, vals = [], [], []
    for i in range(1, P - 1):
        if order == 1:
            rows += [i, i]
            cols += [i - 1, i + 1]
            vals += [-0.5 / h, 0.5 / h]
        else:
            rows += [i, i, i]
            cols += [i - 1, i, i + 1]
            vals += [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)]
    return sp.csr_matrix((vals, (rows, cols)), shape=(P, P))


def interior_node_mask(P: int, n: int, depth: int = 1) -> np.ndarray:
    """Boolean mask over the flat node vector: nodes at least `depth` layers in."""
    idx = np.indices((P,) * n)
    d = np.minimum(idx, P - 1 - idx).min(axis=0)
    return (d >= depth).reshape(-1)


def free_node_mask(P: int, n: int) -> np.ndarray:
    """Free nodes of the clamped problem: at least two layers from the edge."""
    return interior_node_mask(P, n, depth=2)


def build_difference_operators(P: int, n: int, h: float) -> dict:
    """Sparse Hessian-entry operators D[(i,j)] from all nodes to interior nodes.

    Diagonal entries are the 3-point second difference, off-diagonal the
    composition of the two centered first differences (the 4-point cross
    stencil). Rows are restricted to interior nodes so every returned row is
    a complete stencil.
    """
    eye = sp.identity(P, format="csr")
    d1 = _stencil_1d(P, h, order=1)
    d2 = _stencil_1d(P, h, order=2)
    keep = np.where(interior_node_mask(P, n, depth=1))[0]

    def kron_chain(mats):
        out = mats[0]
        for m in mats[1:]:
            out = sp.kron(out, m, format="csr")
        return out

    ops = {}
    for i in range(n):
        for j in range(i, n):
            mats = []
            for ax in range(n):
                if i == j and ax == i:
                    mats.append(d2)
                elif ax == i or ax == j:
                    mats.append(d1)
                else:
                    mats.append(eye)
            ops[(i, j)] = kron_chain(mats)[keep]
    return ops


def _sym_pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _pair_coeff_matrix(coeffs: CoefficientTensor) -> np.ndarray:
    """Quadratic-form coefficients over symmetric index pairs with multiplicity."""
    n = coeffs.n
    pairs = _sym_pairs(n)
    a = coeffs.a
    C = np.zeros((len(pairs), len(pairs)))
    for p, (i, j) in enumerate(pairs):
        for q, (k, l) in enumerate(pairs):
            total = 0.0
            for ii, jj in {(i, j), (j, i)}:
                for kk, ll in {(k, l), (l, k)}:
                    total += a[ii, jj, kk, ll]
            C[p, q] = total
    return C


def assemble_stiffness(coeffs: CoefficientTensor, P: int, h: float) -> sp.csr_matrix:
    """Energy Hessian K with E(u) = u^T K u (includes the h^n cell weight)."""
    n = coeffs.n
    ops = build_difference_operators(P, n, h)
    pairs = _sym_pairs(n)
    C = _pair_coeff_matrix(coeffs)
    K = None
    for p, ij in enumerate(pairs):
        for q, kl in enumerate(pairs):
            if C[p, q] == 0.0:
                continue
            term = (ops[ij].T @ ops[kl]) * (C[p, q] * h ** n)
            K = term if K is None else K + term
    K = 0.5 * (K + K.T)
    return K.tocsr()


def energy(coeffs: CoefficientTensor, u: ScalarField) -> float:
    """Quadrature energy h^n sum a[i,j,k,l] (D_ij u)(D_kl u) over interior nodes."""
    if coeffs.n != u.n:
        raise DimensionMismatchError("coefficient tensor and field dimensions differ")
    H = u.hess
    core = tuple([slice(1, -1)] * u.n)
    Hc = H[core]
    dens = np.einsum("...ij,ijkl,...kl->...", Hc, coeffs.a, Hc)
    return float(np.sum(dens) * u.spacing ** u.n)


@dataclass(frozen=True)
class PlateSolution:
    field: ScalarField
    energy: float
    lambda0: float
    residual: float
    solver: str


def solve_dirichlet(coeffs: CoefficientTensor, boundary_field: ScalarField) -> PlateSolution:
    """Solve the clamped plate problem with the given boundary field.

    The two outermost node layers of the result equal the boundary field
    exactly (bit for bit); the interior minimizes the quadrature energy.
    """
    if coeffs.n != boundary_field.n:
        raise DimensionMismatchError("coefficient tensor and field dimensions differ")
    lam0 = check_ellipticity(coeffs)
    if lam0 < ELLIPTICITY_CUTOFF:
        raise EllipticityError(
            f"ellipticity {lam0:g} below cutoff {ELLIPTICITY_CUTOFF:g}"
        )
    P = boundary_field.points
    if P < 7:
        raise DimensionMismatchError("need at least 7 points per axis to clamp two layers")
    n = boundary_field.n
    h = boundary_field.spacing
    K = assemble_stiffness(coeffs, P, h)
    free = free_node_mask(P, n)
    fixed = ~free
    u = boundary_field.values.reshape(-1).copy()
    A = K[free][:, free].tocsc()
    rhs = -K[free][:, fixed] @ u[fixed]

    nfree = int(free.sum())
    if nfree <= _DIRECT_SOLVE_LIMIT:
        solver = "sparse-direct"
        try:
            x = spla.splu(A).solve(rhs)
        except RuntimeError as exc:
            raise SingularSystemError(f"direct factorization failed: {exc}") from exc
    else:
        solver = "cg"
        M = sp.diags(1.0 / A.diagonal())
        x, info = spla.cg(A, rhs, rtol=LINSOLVE_TOL, atol=0.0, maxiter=20000, M=M)
        if info != 0:
            raise ConvergenceError(f"conjugate gradient did not converge (info={info})")

    if not np.all(np.isfinite(x)):
        raise SingularSystemError("solver returned non-finite values")
    res_vec = A @ x - rhs
    denom = (
        spla.norm(A, np.inf) * max(np.max(np.abs(x)), 1e-300) + np.max(np.abs(rhs))
        if len(rhs)
        else 1.0
    )
    residual = float(np.max(np.abs(res_vec)) / max(denom, 1e-300))
    u[free] = x
    out = ScalarField(
        u.reshape((P,) * n), boundary_field.spacing, boundary_field.origin
    )
    return PlateSolution(out, energy(coeffs, out), lam0, residual, solver)


def interior_derivative_bound(
    u: ScalarField, center, r: float, R: float, refine: int = 2
) -> dict:
    """Interior estimate diagnostic: sup ball Hessian vs scaled outer energy.

    Returns sup over closed-ball nodes of |D^2 u|_F^2, the scaled integral
    (R - r)^(-n) times the Hessian energy over B_R, and their ratio.
    """
    if not (0.0 < r < R):
        raise ValueError("need 0 < r < R")
    center = np.asarray(center, dtype=float).reshape(u.n)
    mesh = u.node_mesh()
    d2 = np.sum((mesh - center) ** 2, axis=-1)
    H = u.hess
    hf2 = np.einsum("...ij,...ij->...", H, H)
    inner = (d2 <= r * r + 1e-14) & ~np.isnan(hf2)
    if not np.any(inner):
        raise ValueError("no valid nodes in the inner ball")
    sup_inner = float(np.max(hf2[inner]))
    quad = region_quadrature(u, ball_indicator(center, R), refine=refine)
    Hq = u.interp_hess(quad.points)
    integ = quad.integrate(np.einsum("...ij,...ij->...", Hq, Hq))
    scaled = integ / (R - r) ** u.n
    return {"sup_inner": sup_inner, "scaled_outer": scaled, "ratio": sup_inner / scaled}


def boundary_gradient_ratio(u: ScalarField) -> float:
    """Max interior |Du| over max |Du| on the two clamped node layers."""
    P, n = u.points, u.n
    idx = np.indices((P,) * n)
    depth = np.minimum(idx, P - 1 - idx).min(axis=0)
    g = u.grad
    gn = np.sqrt(np.einsum("...i,...i->...", g, g))
    layer = (depth >= 1) & (depth <= 2)
    interior = depth >= 3
    top = np.nanmax(gn[interior]) if np.any(interior) else np.nan
    bot = np.nanmax(gn[layer])
    return float(top / bot)
