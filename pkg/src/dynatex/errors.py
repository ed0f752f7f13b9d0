"""Error taxonomy shared by the library and the command line tool.

Each top-level error class carries the process exit code the CLI maps it to,
so command handlers can stay free of exit-code bookkeeping.
"""


class DynatexError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(DynatexError):
    """Invalid or inconsistent configuration (bad field, unknown key, ...)."""

    exit_code = 2


class VersionError(ConfigError):
    """A checkpoint was produced under an incompatible configuration."""


class DataError(DynatexError):
    """Dataset on disk is missing, malformed, or inconsistent."""

    exit_code = 3


class SchemaError(DataError):
    """A JSON document does not have the expected structure."""


class FormatError(DataError):
    """A binary file has a bad magic, header, or payload size."""


class NumericalError(DynatexError):
    """Training or inference produced non-finite values."""

    exit_code = 4


class ShapeError(ValueError):
    """Tensor arguments have incompatible shapes.

    Subclasses ValueError so callers treating shape checks as ordinary
    argument validation keep working.
    """
