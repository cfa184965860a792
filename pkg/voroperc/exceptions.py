"""
Exceptions raised by :mod:`voroperc`.

Each class carries the exit code the command-line driver reports for it.
"""


class VoroError(Exception):
    exit_code = 3


class ValidationError(VoroError, ValueError):
    """Bad parameters, descriptors or query locations."""
    exit_code = 1


class BudgetExceeded(VoroError, RuntimeError):
    """A count, memory, margin or replication cap was hit."""
    exit_code = 2


class FeasibilityError(VoroError, RuntimeError):
    """The linear solver returned something other than an optimum."""
    exit_code = 3


class InvariantViolation(VoroError, AssertionError):
    exit_code = 3
