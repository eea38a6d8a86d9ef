"""Exception hierarchy for the tfc package."""

from typing import Optional


class TfcError(Exception):
    """Base class for every error raised by tfc."""


class DomainError(TfcError, ValueError):
    """A basis was evaluated outside [-1, +1]."""


class InvalidArgumentError(TfcError, ValueError):
    """An argument is outside the accepted range."""


class CapabilityError(TfcError, NotImplementedError):
    """A function or oracle cannot supply the requested derivative order."""


class SingularSupportError(TfcError):
    """The support matrix built from a support set is singular."""

    def __init__(self, support: str, ratio: float):
        self.support = support
        self.ratio = ratio
        super().__init__(
            f"support set {support} gives a singular support matrix "
            f"(sigma_min/sigma_max = {ratio:.3e})"
        )


class NoValidSupportError(TfcError):
    """No monomial support set within the degree cap works for the constraints."""


class WrongSolverError(TfcError):
    """A nonlinear problem was handed to the linear assembler."""


class NumericalError(TfcError, ArithmeticError):
    """A residual evaluation produced NaN or inf."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        super().__init__(message)


class UnknownProblemError(TfcError, KeyError):
    """A problem id is not in the registry."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown problem"
