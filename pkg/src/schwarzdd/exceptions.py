class SchwarzDDError(Exception):
    """Base class for errors raised by schwarzdd."""


class StructuralError(SchwarzDDError, ValueError):
    """Bad sparse structure: index out of range, unsorted index set, ..."""


class DimensionError(SchwarzDDError, ValueError):
    """Operand sizes do not conform."""


class SingularMatrixError(SchwarzDDError, ArithmeticError):
    """A direct factorization met an exactly zero pivot.

    ``subdomain`` is set when the matrix was a local subdomain matrix.
    """

    def __init__(self, message, subdomain=None):
        super().__init__(message)
        self.subdomain = subdomain


class ConfigurationError(SchwarzDDError, ValueError):
    """Inconsistent problem, mesh, decomposition or solver settings."""


class NotPositiveDefiniteError(SchwarzDDError, ArithmeticError):
    """CG met non-positive curvature p^H A p <= 0."""
