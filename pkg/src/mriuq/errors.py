"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
InputError -> 3, NumericalError -> 4.
"""


class MriUqError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MriUqError):
    """Invalid configuration key or value."""


class InputError(MriUqError):
    """Missing or malformed input file."""


class NumericalError(MriUqError):
    """Numerical failure, e.g. a diverged Markov chain or ADMM iterate."""
