"""Named boundary-data families.

Each family takes a grid description (n, points, extent, optional center)
plus its own parameters and returns a ScalarField. The bump family is
normalized so its amplitude parameter is also the Hessian scale at the bump
center, which keeps the small-tilt regime easy to address from configs.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError
from .fields import ScalarField, field_from_function

__all__ = [
    "zero",
    "affine",
    "quadratic",
    "bump",
    "sinusoid",
    "random_smooth",
    "make_family",
    "FAMILY_NAMES",
]


def zero(n: int, points: int, extent: float, center=None) -> ScalarField:
    return field_from_function(lambda x: np.zeros(x.shape[:-1]), n, points, extent, center)


def affine(n: int, points: int, extent: float, slope, offset: float = 0.0, center=None) -> ScalarField:
    slope = np.asarray(slope, dtype=float).reshape(n)
    return field_from_function(
        lambda x: x @ slope + offset, n, points, extent, center
    )


def quadratic(n: int, points: int, extent: float, A, slope=None, offset: float = 0.0, center=None) -> ScalarField:
    """v(x) = x.A x / 2 + slope.x + offset with symmetric A."""
    A = np.asarray(A, dtype=float).reshape(n, n)
    if np.max(np.abs(A - A.T)) > 0:
        A = 0.5 * (A + A.T)
    b = np.zeros(n) if slope is None else np.asarray(slope, dtype=float).reshape(n)

    def fn(x):
        return 0.5 * np.einsum("...i,ij,...j->...", x, A, x) + x @ b + offset

    return field_from_function(fn, n, points, extent, center)


def bump(
    n: int,
    points: int,
    extent: float,
    eps: float,
    width: float,
    bump_center=None,
    center=None,
) -> ScalarField:
    """Gaussian bump eps * width^2 * exp(-|x - c|^2 / (2 width^2)).

    The width^2 prefactor makes eps the Hessian scale: |D^2 v| at the bump
    center is exactly eps, and the global Hessian sup is eps times a factor
    below 1.1.
    """
    if width <= 0:
        raise ValueError("bump width must be positive")
    c = np.zeros(n) if bump_center is None else np.asarray(bump_center, dtype=float).reshape(n)

    def fn(x):
        d2 = np.sum((x - c) ** 2, axis=-1)
        return eps * width * width * np.exp(-0.5 * d2 / (width * width))

    return field_from_function(fn, n, points, extent, center)


def sinusoid(
    n: int,
    points: int,
    extent: float,
    k,
    eps: float,
    phase: float = 0.0,
    center=None,
) -> ScalarField:
    """Plane wave eps * sin(k.x + phase); Hessian sup is eps |k|^2."""
    k = np.asarray(k, dtype=float).reshape(n)
    return field_from_function(
        lambda x: eps * np.sin(x @ k + phase), n, points, extent, center
    )


def random_smooth(
    n: int,
    points: int,
    extent: float,
    hess_sup: float,
    seed: int,
    modes: int = 4,
    center=None,
) -> ScalarField:
    """Random band-limited field rescaled so max node |D^2 v|_F == hess_sup."""
    rng = np.random.default_rng(seed)
    ks = rng.uniform(-2.5, 2.5, size=(modes, n)) / max(extent, 1e-12)
    amps = rng.standard_normal(modes)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=modes)

    def fn(x):
        out = np.zeros(x.shape[:-1])
        for m in range(modes):
            out += amps[m] * np.sin(x @ ks[m] + phases[m])
        return out

    f = field_from_function(fn, n, points, extent, center)
    H = f.hess
    sup = np.nanmax(np.sqrt(np.nansum(H * H, axis=(-2, -1))))
    if sup == 0.0:
        return f
    return ScalarField(f.values * (hess_sup / sup), f.spacing, f.origin)


FAMILY_NAMES = ("zero", "affine", "quadratic", "bump", "sinusoid")


def make_family(name: str, n: int, points: int, extent: float, params: dict) -> ScalarField:
    """Build a named family from a parameter dict (the CLI entry point)."""
    params = dict(params)
    if name == "zero":
        return zero(n, points, extent, **params)
    if name == "affine":
        return affine(n, points, extent, **params)
    if name == "quadratic":
        return quadratic(n, points, extent, **params)
    if name == "bump":
        return bump(n, points, extent, **params)
    if name == "sinusoid":
        return sinusoid(n, points, extent, **params)
    raise DimensionMismatchError(f"unknown boundary family {name!r}")
