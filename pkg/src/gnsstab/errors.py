"""Exception hierarchy shared by all modules."""


class GnsError(Exception):
    """Base class for every error raised by :mod:`gnsstab`."""


class ParameterError(GnsError, ValueError):
    """An input parameter violates its admissible range.

    ``constraint`` names the violated inequality when one applies.
    """

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class ShapeError(GnsError, ValueError):
    """Grid geometry is inconsistent with the requested operation."""


class FormatError(GnsError, ValueError):
    """A file does not follow the expected on-disk format."""


class DomainError(GnsError, ValueError):
    """An operation is undefined for the given input (e.g. zero norm)."""


class DegenerateInputError(DomainError):
    """A quantity used as a divisor or scale factor vanishes."""


class PreconditionError(GnsError, ValueError):
    """The input does not satisfy a documented precondition."""


class NumericalFailure(GnsError, RuntimeError):
    """A numerical routine could not produce a trustworthy answer."""
