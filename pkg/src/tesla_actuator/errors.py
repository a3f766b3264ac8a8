"""Exception types shared across the package."""


class ActuatorError(Exception):
    """Base class for all package errors."""


class ConfigError(ActuatorError, ValueError):
    """Invalid parameter, scenario field, ROI or file content."""


class RangeError(ConfigError):
    """Input outside the supported operating range."""


class EvaluationError(ActuatorError, ArithmeticError):
    """A model evaluation produced a non-finite value."""


class InsufficientDataError(ActuatorError, ValueError):
    """Not enough data points for a fit or an estimate."""


class NumericalError(ActuatorError, ArithmeticError):
    """Simulation state became non-finite mid-run.

    ``last_valid_index`` is the index of the last finite trace sample
    (-1 if none was recorded).
    """

    def __init__(self, message, last_valid_index=-1):
        super().__init__(f"{message} (last valid sample index: {last_valid_index})")
        self.last_valid_index = last_valid_index


class UndefinedValueError(ActuatorError, ValueError):
    """Metric is undefined for the given data (e.g. zero mean)."""
