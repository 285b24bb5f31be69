"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class DegenerateData(DomainError):
    """The data cannot be summarised (too few rows or a constant column)."""


class NonConvergence(ArithmeticError):
    """A series hit its term budget before the stopping rule fired."""

    def __init__(self, message, terms_used=None, partial=None):
        super().__init__(message)
        self.terms_used = terms_used
        self.partial = partial


class ToleranceNotMet(ArithmeticError):
    """A quadrature could not certify its requested tolerance."""

    def __init__(self, message, value=None, est_error=None):
        super().__init__(message)
        self.value = value
        self.est_error = est_error
