"""Exception hierarchy for the package."""
from __future__ import annotations


class StudentizedError(Exception):
    """Base class for all package errors."""


class DomainError(StudentizedError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InvalidDistributionError(StudentizedError, ValueError):
    """A discrete distribution violates its invariants."""


class EnumerationCapExceeded(StudentizedError):
    """A product space is larger than the configured enumeration cap."""


class CostCapExceeded(StudentizedError):
    """A combination sum would exceed the configured kernel-call cap."""


class DegenerateKernelError(StudentizedError):
    """The canonical function of a kernel has zero variance."""


class ModelContractError(StudentizedError):
    """A statistic model violated one of its declared properties."""


class PreconditionError(StudentizedError, ValueError):
    """An operation's stated precondition does not hold for the input."""
