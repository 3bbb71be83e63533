"""Exception types shared across the package."""


class NzloopError(Exception):
    """Base class for all package-specific errors."""


class DivisionByZero(NzloopError, ZeroDivisionError):
    """Inversion of the zero field element."""


class SingularMatrix(NzloopError):
    """Exact matrix inversion hit a rank-deficient matrix."""


class PoleError(NzloopError):
    """Polylogarithm evaluated at its pole w = 1."""


class Degenerate(NzloopError):
    """The datum's propagator matrix is singular."""


class PrecisionFailure(NzloopError):
    """Numeric root refinement or consistency check did not converge."""


class SchemaError(NzloopError, ValueError):
    """Datum file violates the schema (missing field, dimension mismatch)."""


class FieldError(NzloopError, ValueError):
    """Coefficient list incompatible with the number field degree."""


class MalformedFile(NzloopError, ValueError):
    """Diagram-set file cannot be parsed."""
