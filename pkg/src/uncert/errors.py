"""Exception hierarchy shared by the library and the CLI."""


class UncertError(Exception):
    """Base class for all library errors."""


class NumericalError(UncertError):
    """An eigensolver or cross-check broke down (CLI exit code 3)."""


class NotPSDError(UncertError, ValueError):
    pass


class DomainMismatchError(UncertError, ValueError):
    pass


class NotPhiDensityError(UncertError, ValueError):
    pass


class InfeasibleDensityError(UncertError, ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedMapError(UncertError, ValueError):
    pass


class SchemaError(UncertError, ValueError):
    pass


class ConfigError(UncertError, ValueError):
    pass
