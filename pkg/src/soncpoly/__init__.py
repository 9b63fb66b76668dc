"""Nonnegativity certificates for sparse polynomials via sums of
nonnegative circuit polynomials, with exact rational verification."""

from .circuits import (
    CircuitNumber,
    CircuitPoly,
    circuit_number,
    circuit_zero,
    is_nonnegative_circuit,
    theta_compare,
)
from .errors import (
    CertificateFormatError,
    DimensionError,
    IllConditionedError,
    NotCircuitError,
    PivotLimitExceeded,
    PolyParseError,
    SoncError,
)
from .geometry import (
    BarycentricCoords,
    LinearSystem,
    PointSet,
    Trellis,
    affine_dimension,
    barycentric,
    enumerate_circuits,
    helly_crosscheck,
    hull_vertices,
    interior_classification,
    nonneg_solve,
    same_side_check,
    simple_vertex_check,
    solvable,
)
from .poly import (
    SignAssignment,
    SparsePoly,
    SupportSplit,
    factor_out_monomial,
    find_sign_assignment,
    flip_signs,
    necessary_conditions,
    parse_poly,
    split_support,
    substitute_powers,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
