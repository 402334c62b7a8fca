"""Exception hierarchy.

Every domain error carries a distinct ``exit_code`` so the command line can
map failures to documented process exit statuses.
"""


class DiscriminationError(ValueError):
    exit_code = 3


class AngleOutOfDomain(DiscriminationError):
    exit_code = 4


class NonPositiveCoefficient(DiscriminationError):
    exit_code = 5


class ZeroCoefficient(DiscriminationError):
    exit_code = 6


class InvalidCoefficients(DiscriminationError):
    """Wrong shape, non-finite values or broken normalization."""

    exit_code = 7


class ProbabilityOutOfRange(DiscriminationError):
    exit_code = 8


class DimensionNotPowerOfTwo(DiscriminationError):
    exit_code = 9


class MalformedNetlist(DiscriminationError):
    exit_code = 10


class DimensionMismatch(DiscriminationError):
    exit_code = 11


class InvalidConfig(DiscriminationError):
    exit_code = 12


class EmptyRecords(DiscriminationError):
    exit_code = 13
