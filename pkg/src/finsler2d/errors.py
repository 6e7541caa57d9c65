"""Exception types shared across the toolkit."""


class FinslerError(ValueError):
    """Base class for all toolkit errors."""


class DomainError(FinslerError):
    """Raised for inputs outside the admissible domain (e.g. y too close to 0)."""


class InvalidMetricError(FinslerError):
    """Raised when metric data fails a structural validation."""


class NonConvexError(FinslerError):
    """Raised when a fundamental tensor required to be SPD is not."""


class TorsionError(FinslerError):
    """Raised when connection data violates a torsion precondition."""


class SingularIntegrandError(FinslerError):
    """Raised when a quadrature path crosses a pole of the integrand.

    Carries the fiber angle of the offending pole in ``location``.
    """

    def __init__(self, message: str, location: float):
        super().__init__(message)
        self.location = location
