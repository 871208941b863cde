"""Uniform cubical grids, discrete derivatives, and multilinear interpolation.

A ScalarField samples a function on a square or cubical grid with an odd
number of nodes per axis, so the box center is itself a node. The grid
invariant spacing * (points - 1) = 2 * extent is enforced on construction
and on deserialization.

Derivative fields use second order centered differences and live on the
interior nodes; the outermost node layer of a derivative field is NaN by
construction and never read by valid callers. Off-grid evaluation is plain
multilinear interpolation of precomputed node data, which keeps every
downstream quantity a piecewise-multilinear function of the stored values.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .constants import ALG_TOL, SCHEMA_VERSION
from .errors import DimensionMismatchError, GridError, GridRegionError

__all__ = [
    "ScalarField",
    "field_from_function",
    "multilinear",
    "gradient_nodes",
    "hessian_nodes",
]


@dataclass(frozen=True)
class ScalarField:
    """Node values on a uniform cubical grid centered at `origin`."""

    values: np.ndarray
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = v.ndim
        if n < 1 or n > 3:
            raise GridError(f"supported dimensions are 1..3, got {n}")
        P = v.shape[0]
        if any(s != P for s in v.shape):
            raise GridError(f"grid must be square/cubical, got shape {v.shape}")
        if P % 2 == 0:
            raise GridError(f"points per axis must be odd, got {P}")
        if P < 3:
            raise GridError("need at least 3 points per axis")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise GridError("spacing must be positive and finite")
        origin = np.asarray(self.origin, dtype=float).reshape(-1)
        if origin.shape != (n,):
            raise DimensionMismatchError(
                f"origin has shape {origin.shape}, expected ({n},)"
            )
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", origin)

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
            and self.spacing == other.spacing
            and np.array_equal(self.origin, other.origin)
        )

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def points(self) -> int:
        return self.values.shape[0]

    @property
    def extent(self) -> float:
        """Half-width of the box; spacing * (points - 1) == 2 * extent exactly."""
        return self.spacing * (self.points - 1) / 2.0

    def axis_coords(self, k: int) -> np.ndarray:
        half = (self.points - 1) // 2
        return self.origin[k] + self.spacing * (np.arange(self.points) - half)

    def node_mesh(self) -> np.ndarray:
        """All node coordinates, shape (P,)*n + (n,)."""
        axes = [self.axis_coords(k) for k in range(self.n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @cached_property
    def grad(self) -> np.ndarray:
        return gradient_nodes(self.values, self.spacing)

    @cached_property
    def hess(self) -> np.ndarray:
        return hessian_nodes(self.values, self.spacing)

    def interp_values(self, pts: np.ndarray) -> np.ndarray:
        return multilinear(self.values, self._first_node(), self.spacing, pts)

    def interp_grad(self, pts: np.ndarray) -> np.ndarray:
        self._check_inner(pts, margin=1.0)
        return multilinear(self.grad, self._first_node(), self.spacing, pts)

    def interp_hess(self, pts: np.ndarray) -> np.ndarray:
        self._check_inner(pts, margin=1.0)
        return multilinear(self.hess, self._first_node(), self.spacing, pts)

    def _first_node(self) -> np.ndarray:
        return self.origin - self.extent

    def inner_halfwidth(self, margin: float = 1.0) -> float:
        """Half-width of the box where derivative interpolation is valid."""
        return self.extent - margin * self.spacing

    def _check_inner(self, pts: np.ndarray, margin: float):
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != self.n:
            raise DimensionMismatchError(
                f"points have dimension {pts.shape[-1]}, grid has {self.n}"
            )
        half = self.inner_halfwidth(margin) + ALG_TOL * max(1.0, self.extent)
        if pts.size and np.max(np.abs(pts - self.origin)) > half:
            raise GridRegionError(
                "evaluation point outside the derivative-valid grid region"
            )

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "n": self.n,
            "points_per_axis": self.points,
            "spacing": self.spacing,
            "origin": self.origin.tolist(),
            "extent": self.extent,
            "values": self.values.reshape(-1).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScalarField":
        n = int(d["n"])
        P = int(d["points_per_axis"])
        spacing = float(d["spacing"])
        extent = float(d["extent"])
        if abs(spacing * (P - 1) - 2.0 * extent) > 1e-12 * max(1.0, extent):
            raise GridError("grid invariant spacing*(points-1) == 2*extent violated")
        values = np.asarray(d["values"], dtype=float).reshape((P,) * n)
        return cls(values, spacing, np.asarray(d["origin"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "ScalarField":
        return cls.from_json_dict(json.loads(s))


def field_from_function(
    fn: Callable[[np.ndarray], np.ndarray],
    n: int,
    points: int,
    extent: float,
    center=None,
) -> ScalarField:
    """Sample fn(points (..., n)) -> (...,) on a fresh grid."""
    if center is None:
        center = np.zeros(n)
    center = np.asarray(center, dtype=float).reshape(n)
    spacing = 2.0 * extent / (points - 1)
    probe = ScalarField(np.zeros((points,) * n), spacing, center)
    mesh = probe.node_mesh()
    vals = np.asarray(fn(mesh), dtype=float)
    if vals.shape != mesh.shape[:-1]:
        raise DimensionMismatchError("field function returned wrong shape")
    return ScalarField(vals, spacing, center)


def gradient_nodes(values: np.ndarray, h: float) -> np.ndarray:
    """Centered first differences; shape (P,)*n + (n,), NaN on the outer layer."""
    n = values.ndim
    out = np.full(values.shape + (n,), np.nan)
    for k in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        mid = [slice(None)] * n
        lo[k] = slice(0, -2)
        hi[k] = slice(2, None)
        mid[k] = slice(1, -1)
        out[tuple(mid) + (k,)] = (values[tuple(hi)] - values[tuple(lo)]) / (2.0 * h)
    _blank_outer(out, n)
    return out


def hessian_nodes(values: np.ndarray, h: float) -> np.ndarray:
    """Centered second differences; shape (P,)*n + (n,n), NaN on the outer layer.

    Diagonal entries use the 3-point stencil, off-diagonal the 4-point cross
    stencil; the result is symmetric by construction.
    """
    n = values.ndim
    out = np.full(values.shape + (n, n), np.nan)
    h2 = h * h
    for k in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        mid = [slice(None)] * n
        lo[k] = slice(0, -2)
        hi[k] = slice(2, None)
        mid[k] = slice(1, -1)
        out[tuple(mid) + (k, k)] = (
            values[tuple(hi)] - 2.0 * values[tuple(mid)] + values[tuple(lo)]
        ) / h2
    for k in range(n):
        for l in range(k + 1, n):
            pp = [slice(1, -1)] * n
            pm = [slice(1, -1)] * n
            mp = [slice(1, -1)] * n
            mm = [slice(1, -1)] * n
            pp[k], pp[l] = slice(2, None), slice(2, None)
            pm[k], pm[l] = slice(2, None), slice(0, -2)
            mp[k], mp[l] = slice(0, -2), slice(2, None)
            mm[k], mm[l] = slice(0, -2), slice(0, -2)
            mid = tuple([slice(1, -1)] * n)
            cross = (
                values[tuple(pp)] - values[tuple(pm)] - values[tuple(mp)] + values[tuple(mm)]
            ) / (4.0 * h2)
            out[mid + (k, l)] = cross
            out[mid + (l, k)] = cross
    _blank_outer(out, n)
    return out


def _blank_outer(arr: np.ndarray, n: int):
    for k in range(n):
        sl = [slice(None)] * arr.ndim
        sl[k] = 0
        arr[tuple(sl)] = np.nan
        sl[k] = -1
        arr[tuple(sl)] = np.nan


def multilinear(
    data: np.ndarray, first_node: np.ndarray, spacing: float, pts: np.ndarray
) -> np.ndarray:
    """Multilinear interpolation of node data at arbitrary points.

    data has shape (P,)*n + comp_shape, pts has shape (..., n); the result
    has shape pts_batch + comp_shape. Points must lie inside the grid box.
    """
    pts = np.asarray(pts, dtype=float)
    n = pts.shape[-1]
    P = data.shape[0]
    comp_ndim = data.ndim - n
    t = (pts - first_node) / spacing
    if np.min(t) < -1e-9 or np.max(t) > P - 1 + 1e-9:
        raise GridRegionError("interpolation point outside the grid box")
    i0 = np.clip(np.floor(t).astype(int), 0, P - 2)
    f = t - i0
    batch = pts.shape[:-1]
    out = np.zeros(batch + data.shape[n:])
    for corner in itertools.product((0, 1), repeat=n):
        idx = tuple(i0[..., k] + corner[k] for k in range(n))
        w = np.ones(batch)
        for k in range(n):
            w = w * (f[..., k] if corner[k] else 1.0 - f[..., k])
        out += w.reshape(batch + (1,) * comp_ndim) * data[idx]
    return out
