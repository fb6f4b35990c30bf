"""Exception classes used throughout the toolkit."""

from typing import Optional, Sequence

__all__ = (
    "ApplicationExit",
    "InvalidArgumentError",
    "InvalidStateError",
    "MissingRewardError",
    "ModelError",
    "ModelSyntaxError",
    "NumericalError",
    "PctlSyntaxError",
    "RfidCheckError",
    "StateLimitExceededError",
    "UnknownLabelError",
    "UnsupportedStructureError",
)


class ApplicationExit(RuntimeError):
    """Exception that can be thrown while a command is running to request the
    application to terminate gracefully with a given exit code.
    """

    exit_code: int
    """Proposed exit code for the application."""

    def __init__(self, message: str, *, exit_code: int = 1) -> None:
        self.exit_code = exit_code
        super().__init__(message)


class RfidCheckError(Exception):
    """Base class for all domain-specific errors of the toolkit."""


class InvalidArgumentError(RfidCheckError, ValueError):
    """Raised when an operation receives an argument that violates its
    preconditions, e.g. a bit-string of the wrong length.
    """


class InvalidStateError(RfidCheckError, RuntimeError):
    """Raised when an operation is invoked on an object that is not in a
    state where the operation makes sense.
    """


class NumericalError(RfidCheckError, ArithmeticError):
    """Raised when a numerical procedure fails, e.g. a singular linear system
    or an iterative solver that hit its iteration cap.
    """


class UnsupportedStructureError(RfidCheckError):
    """Raised when a query is evaluated on a chain whose structure the
    engine does not support.
    """


class ModelError(RfidCheckError):
    """Raised for semantic errors in guarded-command models."""


class StateLimitExceededError(ModelError):
    """Raised when the state space exploration exceeds its configured cap."""

    limit: int

    def __init__(self, limit: int) -> None:
        self.limit = limit
        super().__init__(f"State space exceeds the limit of {limit} states")


class ModelSyntaxError(RfidCheckError):
    """Raised when a textual model or chain description cannot be parsed."""

    line: Optional[int]

    def __init__(self, message: str, *, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PctlSyntaxError(RfidCheckError):
    """Raised when a PCTL formula cannot be parsed."""

    reason: str
    """Description of the problem, without location information."""

    position: int
    """Character offset in the input where the error was detected."""

    expected: Sequence[str]
    """Tokens that would have been accepted at the position of the error."""

    location: Optional[str]
    """File and line of the formula when it was read from a property file."""

    def __init__(
        self,
        message: str,
        *,
        position: int,
        expected: Sequence[str] = (),
        location: Optional[str] = None,
    ) -> None:
        self.reason = message
        self.position = position
        self.expected = tuple(expected)
        self.location = location
        details = f"{message} at position {position}"
        if self.expected:
            details += f" (expected {', '.join(self.expected)})"
        if location:
            details = f"{location}: {details}"
        super().__init__(details)


class UnknownLabelError(RfidCheckError, KeyError):
    """Raised when a formula refers to an atomic proposition that the chain
    does not define.
    """

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown label"


class MissingRewardError(RfidCheckError, KeyError):
    """Raised when a reward query is evaluated without a matching reward
    structure.
    """

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing reward structure"
