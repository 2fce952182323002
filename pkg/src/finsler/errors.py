"""Exception types shared across the package."""


class FinslerError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FinslerError):
    """A tangent vector or base point lies outside the metric's conic domain."""


class DegenerateMetricError(FinslerError):
    """The fundamental tensor is numerically degenerate at a sample."""


class ParseError(FinslerError):
    """An expression or metric file failed to parse.

    Carries the offending position so callers can point at the character.
    """

    def __init__(self, message, text=None, pos=None):
        self.text = text
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class IntegrationError(FinslerError):
    """An ODE integration failed or left the metric domain."""
