"""Exception hierarchy. CLI exit codes hang off these classes."""


class VoxfairError(Exception):
    exit_code = 1


class SchemaError(VoxfairError, ValueError):
    """Malformed input: CSV rows, spec JSON, out-of-range fields."""

    exit_code = 2

    def __init__(self, message, *, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field


class DegenerateDataError(VoxfairError, ValueError):
    """Data that makes a requested quantity undefined (empty set, single class)."""

    exit_code = 3


class CalibrationError(DegenerateDataError):
    """A calibrator training split lacks a class."""

    def __init__(self, message, *, group=None, fold=None):
        super().__init__(message)
        self.group = group
        self.fold = fold
