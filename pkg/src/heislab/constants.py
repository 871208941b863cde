"""Numerical tolerance constants used across the package.

These are configuration values, not magic numbers scattered through the
code. Algebraic identities (group laws, frame annihilation, serialization
round trips) are checked at ALG_TOL; matrix structural checks that involve
an eigendecomposition or a QR factorization get the slightly looser
STRUCTURE_TOL.
"""

# Exact algebraic identities evaluated in floating point.
ALG_TOL = 1e-12

# Unitarity check ||U*U - I||_max for matrices supplied by callers.
UNITARY_TOL = 1e-10

# Structural matrix checks (symmetry of supplied metrics, SPD residuals).
STRUCTURE_TOL = 1e-12

# Relative residual target for sparse linear solves.
LINSOLVE_TOL = 1e-12

# Ellipticity cutoff below which the plate solver refuses to proceed.
ELLIPTICITY_CUTOFF = 1e-10

# Schema version stamped into serialized artifacts and printed by the CLI.
SCHEMA_VERSION = "1"
