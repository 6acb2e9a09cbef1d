"""Exception types shared across the package."""


class TreecastError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(TreecastError):
    """Invalid structure, configuration, or input file (CLI exit code 2)."""


class StructuralValidityError(ValidationError):
    """A node list does not describe a single rooted tree."""


class SeriesTooShortError(ValidationError):
    """A series is too short for the requested forecaster."""


class TooFewObservationsError(ValidationError):
    """Not enough complete residual rows to estimate a covariance."""


class NumericalError(TreecastError):
    """Numerical failure during reconciliation (CLI exit code 3)."""


class IllConditionedWeightsError(NumericalError):
    """The weight matrix is singular or too ill-conditioned to invert."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StructuralRankError(NumericalError):
    """The weighted normal-equation matrix lost full rank."""


class DivergenceError(NumericalError):
    """Non-finite forecasts appeared during iterative reconciliation."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


class UndefinedChangeError(NumericalError):
    """Relative change against a zero baseline RMSE."""
