"""Exception hierarchy shared by the library and the CLI.

Each error carries a ``category`` used by the CLI to build its
``error:<category>:`` prefix and to pick the exit code.
"""


class DetreeError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"
    exit_code = 1


class UsageError(DetreeError):
    """Command line was malformed (unknown flag, missing argument, ...)."""

    category = "usage"
    exit_code = 2


class DataError(DetreeError):
    """Input data is unusable: bad CSV cell, missing column, empty file."""

    category = "data"
    exit_code = 3


class ModelParseError(DataError):
    """Model file is not valid JSON or is truncated."""

    category = "model"


class ModelSchemaError(DataError):
    """Model file parsed but its format tag is unknown or missing."""

    category = "model"


class ModelInvariantError(DataError):
    """Model file parsed but violates a structural invariant."""

    category = "model"


class ConfigError(DetreeError):
    """Inconsistent configuration: bad bandwidths, region syntax, caps."""

    category = "config"
    exit_code = 4


class NumericError(DetreeError):
    """A numeric precondition failed (degenerate geometry, empty curve)."""

    category = "numeric"
    exit_code = 4
