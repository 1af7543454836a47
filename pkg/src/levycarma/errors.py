"""Exception hierarchy shared by all modules."""


class CarmaError(Exception):
    """Base class for package errors."""


class DomainError(CarmaError, ValueError):
    """Parameters or inputs outside the admissible domain."""


class UnsupportedError(CarmaError, NotImplementedError):
    """Operation has no implementation for the given model."""


class NumericalError(CarmaError, ArithmeticError):
    """A numerical routine failed (singular system, non-PD covariance, ...)."""


class SingularityError(NumericalError):
    """A resolvent or polynomial matrix is singular at the evaluation point."""

    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"singular resolvent at z={z!r}")
