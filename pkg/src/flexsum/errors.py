"""Exception types shared across the package."""


class FlexsumError(Exception):
    """Base class for all package errors."""


class DomainError(FlexsumError, ValueError):
    """Invalid input data or an operation outside its mathematical domain."""


class SolverFailure(FlexsumError, RuntimeError):
    """The LP solver could not certify an optimal, infeasible, or unbounded status."""
