"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EvaluationError(ArithmeticError):
    """A numerical evaluation could not be completed reliably."""


class CancellationError(EvaluationError):
    """An alternating series lost too many digits to cancellation.

    Raised instead of returning a wrong answer; the message points at the
    Monte Carlo / integral alternatives.
    """


class ConvergenceError(EvaluationError):
    """A series or iteration failed to meet its stopping rule within budget."""
