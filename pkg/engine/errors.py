# engine/errors.py
"""Exception hierarchy shared by every package of the lab."""
from typing import Optional


class LabError(Exception):
    """Base class for all errors raised by the lab."""


class AlignmentError(LabError, ValueError):
    """Two weight vectors cannot be compared index by index."""


class TruncationError(LabError):
    """A computation needed mass beyond the materialized components."""


class DomainError(LabError, ValueError):
    """A parameter lies outside the domain of the operation."""


class PartitionExtensionRequired(LabError):
    """A time point lies beyond the materialized horizon of a partition."""

    def __init__(self, message: str, t: float, last_tau: float):
        super().__init__(message)
        self.t = t
        self.last_tau = last_tau


class NoActiveJumpError(LabError):
    """No NRM jump is born at or before the requested time."""


class UnsupportedModelError(LabError, NotImplementedError):
    """The requested model, kernel or baseline combination is not supported."""


class ConfigError(LabError):
    """Invalid configuration; carries the offending line and field when known."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"({', '.join(location)}) " if location else ""
        super().__init__(prefix + message)


class DataError(LabError):
    """Malformed input data; carries the offending row number when known."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        prefix = f"(row {row}) " if row is not None else ""
        super().__init__(prefix + message)


class PropertyCheckFailure(LabError):
    """A property check of the validation suite did not hold."""
