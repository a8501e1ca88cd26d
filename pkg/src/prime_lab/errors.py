"""Exception types shared across the package."""


class PrimeLabError(ValueError):
    """Base class for validation failures (CLI exit code 1)."""


class DomainError(PrimeLabError):
    """An argument lies outside the domain of the operation."""


class EmptyRangeError(DomainError):
    """A prime range contains no primes."""


class CapacityError(PrimeLabError):
    """A request exceeds a configured size ceiling."""


class ParseError(PrimeLabError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateSignalWarning(UserWarning):
    """Input signal carries no usable information (e.g. identically zero)."""
