"""Exception types shared across the package."""


class MultiBellError(Exception):
    """Base class for all package errors."""


class DomainError(MultiBellError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateSourceError(DomainError):
    """The source model is undefined at the requested parameters."""


class TruncationError(MultiBellError):
    """A weight distribution is truncated too tightly for the request."""


class UndefinedScoreError(MultiBellError, ArithmeticError):
    """A Bell ratio has a vanishing denominator."""


class NoRootError(MultiBellError):
    """A root search found no sign change on its bracket."""
