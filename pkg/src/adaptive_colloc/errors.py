"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values or otherwise broke down.

    Raised instead of silently propagating NaN/Inf so that callers (e.g.
    the training driver) can abort a run while preserving partial traces.
    """


class ConfigError(ValueError):
    """A configuration file or key could not be interpreted."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
