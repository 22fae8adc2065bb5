"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model or run configuration (bad law, cone, or config file)."""


class NumericsError(RuntimeError):
    """A numerical procedure failed to converge or produced inconsistent values."""


class WindowTooSmallError(NumericsError):
    """A lattice truncation window cannot meet its accuracy contract.

    Carries a suggested replacement radius in ``suggested_L``.
    """

    def __init__(self, message, suggested_L=None):
        super().__init__(message)
        self.suggested_L = suggested_L
