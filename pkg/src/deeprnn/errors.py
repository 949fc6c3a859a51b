"""Exception types shared across the library."""


class ConfigurationError(ValueError):
    """Inconsistent shapes, invalid options, or malformed run configuration."""


class NumericError(ArithmeticError):
    """Non-finite values or failed numerical convergence.

    Carries an optional ``timestep`` (divergence inside a sequence) and, when
    training aborts, the partial ``train_log`` collected so far.
    """

    def __init__(self, message: str, timestep: int | None = None, train_log=None):
        super().__init__(message)
        self.timestep = timestep
        self.train_log = train_log


class DataFormatError(ValueError):
    """Unparseable corpus data. ``line`` is 1-based when it applies."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
