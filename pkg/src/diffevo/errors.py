"""Exception hierarchy shared by all modules."""


class DiffEvoError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(DiffEvoError, ValueError):
    """An argument is outside its valid domain."""


class ScheduleError(DiffEvoError, ValueError):
    """A schedule value violates ordering or radicand constraints."""


class DegenerateWeightsError(DiffEvoError, ArithmeticError):
    """All kernel weights for an individual vanished (Z == 0)."""


class EvaluationError(DiffEvoError, RuntimeError):
    """A fitness evaluation failed for a specific individual."""

    def __init__(self, index, cause):
        super().__init__(f"fitness evaluation failed for individual {index}: {cause!r}")
        self.index = index
        self.cause = cause


class StateError(DiffEvoError, RuntimeError):
    """An environment was stepped after termination."""


class ConfigError(DiffEvoError, ValueError):
    """An experiment configuration is invalid."""
