"""Exception types shared across the package.

The split mirrors how failures are reported: bad data handed to a
constructor or parser (InputError), a mathematically well-formed input
that violates an operation's domain (DomainError), a computation that
lost too much accuracy to certify its own postconditions
(NumericalError), and inputs that are simply too large for the dense
linear algebra used here (SizeError).
"""


class InputError(ValueError):
    """Malformed or inconsistent input data."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of the operation."""


class DegenerateInputError(DomainError):
    """Input is so degenerate the requested quantity is undefined."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


class SizeError(ValueError):
    """Problem dimensions exceed what dense computation supports."""
