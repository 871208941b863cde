"""Desk-scale numerical laboratory for Legendrian graphs over the horizontal plane.

The package splits into an algebraic kernel (group operations, gauge,
contact form), a calibration layer (simple n-vectors and constant metrics
on graph planes), graph-surface quadrature, a clamped fourth-order model
solver, the nonlinear area minimizer built on exact first and second
variations, cylindrical excess diagnostics, and a Monte Carlo study of a
lifted Clifford-style torus. The command line front end lives in
`heislab.cli`.

Submodules import lazily so that the CLI can cap BLAS thread pools via
environment variables before numpy is loaded.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "cli",
    "constants",
    "errors",
    "excess",
    "families",
    "fields",
    "graph",
    "heis",
    "minimize",
    "plate",
    "quadrature",
    "torus",
    "wedge",
)

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
