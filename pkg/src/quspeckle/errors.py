"""Exception types shared across the toolkit."""


class ParameterDomainError(ValueError):
    """A distribution parameter or sample value is outside its domain."""


class DegenerateInputError(ValueError):
    """Input data carries no usable statistical information (e.g. zero variance)."""


class AccuracyError(RuntimeError):
    """A numerical routine could not reach the requested tolerance within budget.

    Carries ``residual``, the routine's estimate of the remaining error.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class MalformedFileError(ValueError):
    """A map file or manifest violates the on-disk format contract."""


class ConfigError(ValueError):
    """An invalid configuration or flag combination."""


class EmptyDomainError(ValueError):
    """A reduction was requested over zero included pixels."""
