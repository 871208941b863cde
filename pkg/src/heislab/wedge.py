"""Simple n-vectors in the horizontal frame and constant comparison metrics.

A horizontal vector is stored by its 2n components in the orthonormal frame
(X_1 .. X_n, Y_1 .. Y_n). A simple n-vector is a wedge of n such vectors,
kept as its factor list; inner products of simple n-vectors under a metric h
are Gram determinants,

    <a_1 ^ .. ^ a_n, b_1 ^ .. ^ b_n>_h = det [ h(a_i, b_j) ]_ij ,

which is all the exterior algebra this package ever needs. Non-simple
combinations are handled by callers through bilinear expansion (see
composite_inner).

A MetricForm is a constant symmetric positive definite 2n x 2n matrix h_0.
On construction it is checked for symmetry and positivity, and randomized
sampling over unit Legendrian graph-plane n-vectors records empirical mass
bounds lambda_hat <= |pi|_h <= Lambda_hat together with an empirical
coercivity constant; a metric failing the positivity of those samples is
rejected as malformed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import STRUCTURE_TOL
from .errors import DimensionMismatchError, MetricError

__all__ = [
    "MetricForm",
    "SimpleNVector",
    "identity_metric",
    "basis_pi0",
    "basis_pij",
    "graph_plane_nvector",
    "nvector_inner",
    "nvector_norm",
    "composite_inner",
    "metric_bounds",
    "coercivity_sample",
    "random_symmetric",
]

_REGISTRATION_SAMPLES = 256
_REGISTRATION_SEED = 20260819


@dataclass(frozen=True)
class SimpleNVector:
    """Wedge of n horizontal vectors; factors has shape (n, 2n)."""

    factors: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=float)
        if f.ndim != 2 or f.shape[1] != 2 * f.shape[0]:
            raise DimensionMismatchError(
                f"factor array must be (n, 2n), got {f.shape}"
            )
        object.__setattr__(self, "factors", f)

    @property
    def n(self) -> int:
        return self.factors.shape[0]

    def scaled(self, c: float) -> "SimpleNVector":
        """The same wedge scaled by c (applied to the first factor)."""
        f = self.factors.copy()
        f[0] *= c
        return SimpleNVector(f)


def basis_pi0(n: int) -> SimpleNVector:
    """X_1 ^ .. ^ X_n, the horizontal coordinate n-vector."""
    return SimpleNVector(np.eye(n, 2 * n))


def basis_pij(n: int, i: int, j: int) -> SimpleNVector:
    """pi_0 with slot i replaced by Y_j (0-based slots and labels)."""
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"slot ({i},{j}) outside dimension n={n}")
    f = np.eye(n, 2 * n)
    f[i] = 0.0
    f[i, n + j] = 1.0
    return SimpleNVector(f)


def graph_plane_nvector(A: np.ndarray, normalized: bool = True) -> SimpleNVector:
    """Tangent n-vector of the Lagrangian graph plane {(xi, A xi)}.

    Factors are (e_i, A e_i); with normalized=True the wedge is divided by
    its g-norm sqrt(det(I + A^2)) so the result is a unit n-vector.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError("plane parameter A must be square")
    f = np.concatenate([np.eye(n), A], axis=1)
    if normalized:
        norm = np.sqrt(np.linalg.det(np.eye(n) + A @ A))
        f = f / norm ** (1.0 / n)
    return SimpleNVector(f)


@dataclass(frozen=True)
class MetricForm:
    """Constant SPD metric on the horizontal slice, with sampled mass bounds."""

    matrix: np.ndarray
    lambda_hat: float = field(default=0.0, compare=False)
    Lambda_hat: float = field(default=0.0, compare=False)
    coercivity_hat: float = field(default=0.0, compare=False)

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2 != 0:
            raise MetricError(f"metric matrix must be 2n x 2n, got {H.shape}")
        scale = max(1.0, float(np.max(np.abs(H))))
        if np.max(np.abs(H - H.T)) > STRUCTURE_TOL * scale:
            raise MetricError("metric matrix is not symmetric")
        H = 0.5 * (H + H.T)
        eigs = np.linalg.eigvalsh(H)
        if eigs[0] <= 0.0:
            raise MetricError(f"metric matrix is not positive definite (min eig {eigs[0]:g})")
        object.__setattr__(self, "matrix", H)
        lam, Lam = metric_bounds(H, samples=_REGISTRATION_SAMPLES, seed=_REGISTRATION_SEED)
        coer = coercivity_sample(H, samples=_REGISTRATION_SAMPLES, seed=_REGISTRATION_SEED)
        if lam <= 0.0 or coer <= 0.0:
            raise MetricError("sampled mass or coercivity bound is non-positive")
        object.__setattr__(self, "lambda_hat", float(lam))
        object.__setattr__(self, "Lambda_hat", float(Lam))
        object.__setattr__(self, "coercivity_hat", float(coer))

    def __eq__(self, other):
        if not isinstance(other, MetricForm):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and np.array_equal(
            self.matrix, other.matrix
        )

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def to_json_dict(self) -> dict:
        return {"n": self.n, "H": self.matrix.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "MetricForm":
        H = np.asarray(d["H"], dtype=float)
        if H.shape != (2 * d["n"], 2 * d["n"]):
            raise MetricError("serialized H has wrong shape for declared n")
        return cls(H)


def identity_metric(n: int) -> MetricForm:
    return MetricForm(np.eye(2 * n))


def _as_matrix(h) -> np.ndarray:
    if isinstance(h, MetricForm):
        return h.matrix
    return np.asarray(h, dtype=float)


def nvector_inner(h, a: SimpleNVector, b: SimpleNVector) -> float:
    """Gram determinant inner product of two simple n-vectors under h."""
    if a.n != b.n:
        raise DimensionMismatchError("n-vectors of different degree")
    H = _as_matrix(h)
    if H.shape[0] != 2 * a.n:
        raise DimensionMismatchError("metric dimension does not match n-vectors")
    G = a.factors @ H @ b.factors.T
    return float(np.linalg.det(G))


def nvector_norm(h, a: SimpleNVector) -> float:
    return float(np.sqrt(max(nvector_inner(h, a, a), 0.0)))


def composite_inner(h, combo_a: Sequence, combo_b: Sequence) -> float:
    """Inner product of formal linear combinations of simple n-vectors.

    Each combination is a sequence of (coefficient, SimpleNVector) pairs and
    the result expands bilinearly through Gram determinants.
    """
    total = 0.0
    for ca, va in combo_a:
        for cb, vb in combo_b:
            total += ca * cb * nvector_inner(h, va, vb)
    return total


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Random symmetric n x n matrix with entries of typical size `scale`."""
    M = rng.standard_normal((n, n))
    return scale * 0.5 * (M + M.T)


def _sample_planes(Hm: np.ndarray, samples: int, seed: int):
    n = Hm.shape[0] // 2
    rng = np.random.Generator(np.random.Philox(seed))
    # Spread tilts over several orders of magnitude so the sampled bounds see
    # both the nearly flat and the strongly tilted parts of the chart.
    scales = np.exp(rng.uniform(-3.0, 1.0, size=samples))
    for k in range(samples):
        yield random_symmetric(rng, n, scale=scales[k])


def metric_bounds(h, samples: int = 4096, seed: int = 0):
    """Sampled (min, max) of |pi|_h over random unit Legendrian plane n-vectors."""
    Hm = _as_matrix(h)
    lo, hi = np.inf, -np.inf
    for A in _sample_planes(Hm, samples, seed):
        pi = graph_plane_nvector(A)
        v = nvector_norm(Hm, pi)
        lo, hi = min(lo, v), max(hi, v)
    return float(lo), float(hi)


def coercivity_sample(h, samples: int = 1024, seed: int = 0) -> float:
    """Sampled coercivity constant of the metric h.

    Over random pairs of distinct unit plane n-vectors pi, om, returns the
    minimum of (|pi|_h - h(pi, om)/|om|_h) / |pi - om|^2, where |pi - om|^2
    is expanded by polarization under the standard frame metric. Positive
    for every positive definite h by strict Cauchy-Schwarz.
    """
    Hm = _as_matrix(h)
    n = Hm.shape[0] // 2
    gens = _sample_planes(Hm, 2 * samples, seed + 1)
    worst = np.inf
    eye = np.eye(2 * n)
    for _ in range(samples):
        pi = graph_plane_nvector(next(gens))
        om = graph_plane_nvector(next(gens))
        cross = nvector_inner(eye, pi, om)
        gap2 = 2.0 - 2.0 * cross
        if gap2 < 1e-10:
            continue
        num = nvector_norm(Hm, pi) - nvector_inner(Hm, pi, om) / nvector_norm(Hm, om)
        worst = min(worst, num / gap2)
    return float(worst)
