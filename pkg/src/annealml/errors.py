"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 1,
DataError -> 2, NumericalError -> 3.
"""


class AnnealmlError(Exception):
    """Base class for package-specific errors."""


class ConfigError(AnnealmlError, ValueError):
    """Invalid configuration value or experiment setup."""


class DataError(AnnealmlError, ValueError):
    """Malformed or inconsistent dataset input."""


class EncodingError(AnnealmlError, ValueError):
    """Feature vector cannot be mapped onto a problem Hamiltonian."""


class NumericalError(AnnealmlError, RuntimeError):
    """Numerical failure during integration or training."""
