"""Exception types shared across the package.

Every error raised by library code is one of these (or a subclass), so
callers and the CLI can map failures to exit codes without string matching:
validation problems are ValueError subclasses, numerical failures are
RuntimeError subclasses.
"""


class DimensionMismatchError(ValueError):
    """Operands live in groups or grids of different dimension."""


class GaugeOriginError(ValueError):
    """Horizontal gauge gradient requested at the group identity, where it is undefined."""


class NonUnitaryError(ValueError):
    """Matrix passed as a unitary action fails the unitarity check."""


class GridError(ValueError):
    """Malformed grid: even point count, inconsistent extent, or non-square box."""


class GridRegionError(ValueError):
    """Requested region leaves the part of the grid where stencils are valid."""


class ChartError(ValueError):
    """Plane chart parameter outside its validity range (|A| must be <= 1)."""


class MetricError(ValueError):
    """Metric matrix fails a structural check (symmetry, positivity, coercivity sampling)."""


class ConfigError(ValueError):
    """Experiment configuration violates the schema (unknown, missing, or mistyped keys)."""


class EllipticityError(RuntimeError):
    """Coefficient tensor is not elliptic enough to solve with (lambda_0 below cutoff)."""


class SingularSystemError(RuntimeError):
    """Assembled linear system is singular; reported, never silently regularized."""


class ConvergenceError(RuntimeError):
    """Iterative method failed to reach its tolerance within the iteration budget."""
