"""Exception types shared across the package."""

from .linalg import NumericalError


class UnsupportedOrderError(ValueError):
    """A derivative was requested beyond what a kernel or function provides."""


class IllConditionedBasisError(ValueError):
    """The Gram matrix of a trial basis is singular or nearly so."""


class DomainError(ValueError):
    """A point, region or test support lies outside the problem domain."""


class ContractError(ValueError):
    """Inputs violate a documented precondition (shapes, emptiness, ordering)."""


class SingularSystemError(NumericalError):
    """A classical weighted-residual system cannot be solved reliably."""


__all__ = [
    "ContractError",
    "DomainError",
    "IllConditionedBasisError",
    "NumericalError",
    "SingularSystemError",
    "UnsupportedOrderError",
]
