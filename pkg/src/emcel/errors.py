class EmcelError(Exception):
    """Base class for library errors."""


class DomainError(EmcelError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(EmcelError, ValueError):
    """An experiment or scheme configuration violates a precondition."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalError(EmcelError, RuntimeError):
    """Quadrature, root finding or simulation failed to produce a value."""


class InconsistencyError(NumericalError):
    """A monotonicity or bracketing invariant was violated during root search."""


class SchemeIntegrityError(NumericalError):
    """A scale factor moved the chain outside the state space."""
