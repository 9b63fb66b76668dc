"""Exception types shared across the package."""


class SoncError(Exception):
    """Base class for all package-specific errors."""


class PolyParseError(SoncError):
    """Raised when polynomial text cannot be parsed.

    Carries the character offset of the failure in ``position``.
    """

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class DimensionError(SoncError):
    """Raised when dimensions of points, vectors or polynomials disagree."""


class NotCircuitError(SoncError):
    """Raised when data fails the circuit-polynomial preconditions."""


class IllConditionedError(SoncError):
    """Raised when a numerical solve does not meet its residual tolerance."""


class PivotLimitExceeded(SoncError):
    """Raised when the exact simplex exceeds SONC_LP_PIVOT_LIMIT pivots."""


class AssemblyError(SoncError):
    """Raised when certificate assembly produces an invalid circuit."""


class CertificateFormatError(SoncError):
    """Raised for malformed certificate JSON.

    ``path`` is a JSON-pointer-style location of the offending element.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{message} (at {path or '/'})")
