"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code so scripted callers can branch on
failures without parsing messages.
"""


class MomentGuidanceError(Exception):
    """Base class for all package errors."""

    code = "E_INTERNAL"
    exit_status = 1


class ConfigError(MomentGuidanceError):
    """Invalid configuration or API misuse (exit 2)."""

    code = "E_CONFIG"
    exit_status = 2


class UsageError(ConfigError):
    """Operation called with arguments that cannot be evaluated (exit 2)."""

    code = "E_USAGE"


class DimensionError(ConfigError):
    """Incompatible array shapes (exit 2)."""

    code = "E_DIM"


class DataError(MomentGuidanceError):
    """Missing or inconsistent data (exit 3)."""

    code = "E_DATA"
    exit_status = 3


class FormatError(DataError):
    """Malformed on-disk artifact (exit 3)."""

    code = "E_FORMAT"


class NumericError(MomentGuidanceError):
    """Non-finite value produced where a finite one is required (exit 4)."""

    code = "E_NUMERIC"
    exit_status = 4
