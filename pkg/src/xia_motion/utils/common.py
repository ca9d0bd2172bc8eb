"""
Common utilities shared across the xia_motion package:
the error hierarchy, error reporting, and atomic file writes.
"""

import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, Union


# Error Handling Utilities
class AppError(Exception):
    """Base application error. `exit_code` is what the CLI returns."""
    exit_code = 1

    def __init__(self, message: str, exit_code: Optional[int] = None):
        self.message = message
        if exit_code is not None:
            self.exit_code = exit_code
        super().__init__(message)


class UsageError(AppError):
    """Bad command line, bad config key, unknown variant."""
    exit_code = 2


class DataError(AppError):
    """Input data is missing, malformed or too short."""
    exit_code = 3


class ParseError(DataError):
    """Malformed file content; `line` is 1-based when known."""
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientHistoryError(DataError):
    """Sequence shorter than the windows an operation needs."""


class CompatibilityError(DataError):
    """Checkpoint, config and data disagree on shapes."""


class NumericError(AppError):
    """Numeric failure: non-finite values, degenerate geometry, divergence."""
    exit_code = 4


class DimensionError(NumericError):
    """Tensor shapes do not fit the operation."""


class ContractError(NumericError, ValueError):
    """A documented precondition was violated."""


class DegeneracyError(NumericError):
    """Geometry is degenerate (coincident or collinear anchors)."""


class NoUniqueSolutionError(NumericError):
    """The problem has no unique solution (e.g. parallel rays)."""


class TrainingError(NumericError):
    """Training diverged; `step` is the global step that failed."""
    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


_ERROR_TYPES = (
    (UsageError, "usage_error"),
    (ParseError, "parse_error"),
    (DataError, "data_error"),
    (TrainingError, "training_error"),
    (NumericError, "numeric_error"),
)


def describe_error(error: Exception, context: str = "") -> dict:
    """
    Describe an error consistently for logging and exit handling.

    Args:
        error: The exception that occurred
        context: Additional context about where the error occurred

    Returns:
        Standardized error dictionary
    """
    if isinstance(error, AppError):
        error_type = next(name for cls, name in _ERROR_TYPES + ((AppError, "app_error"),)
                          if isinstance(error, cls))
        message = error.message
        exit_code = error.exit_code
    else:
        error_type = "internal_error"
        message = str(error)
        exit_code = 1

    return {
        "success": False,
        "error": f"{context}: {message}" if context else message,
        "error_type": error_type,
        "exit_code": exit_code,
    }


@contextmanager
def atomic_write(path: Union[str, Path], mode: str = "w") -> Iterator:
    """
    Write to a temporary file next to `path` and rename it into place on
    success. On failure the temporary file is removed and `path` is untouched.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        newline = None if "b" in mode else ""
        with os.fdopen(fd, mode, newline=newline) as handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
