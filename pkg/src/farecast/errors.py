"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so anything that should abort
a batch run with a meaningful status belongs here.
"""


class FarecastError(Exception):
    """Base class for all package-level failures."""

    exit_code = 1


class ConfigError(FarecastError):
    """Invalid or inconsistent run/scenario configuration."""

    exit_code = 1


class DataError(FarecastError):
    """Unreadable or structurally broken input data."""

    exit_code = 2


class NumericalError(FarecastError):
    """Estimation or numerical procedure failed fatally."""

    exit_code = 3
