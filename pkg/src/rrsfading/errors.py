"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ParameterError(ValueError):
    """Invalid model parameters (shapes, spreads, distances, ...)."""


class NumericalError(ArithmeticError):
    """A numerical procedure did not reach its target accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class OracleError(NumericalError):
    """The reference (oracle) evaluation failed to converge."""
