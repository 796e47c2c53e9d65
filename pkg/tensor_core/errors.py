"""
tensor_core/errors.py
Exception hierarchy shared by every package.
"""
from typing import Optional


class SovMasError(Exception):
    """Root of all errors raised by this project."""


class InvalidInputError(SovMasError, ValueError):
    """An operation rejected its input (shape, range, or contract breach)."""


class NonFiniteError(SovMasError, ArithmeticError):
    """A loss or gradient contained NaN/Inf."""


class NonFiniteInputError(InvalidInputError, NonFiniteError):
    """An operation received NaN/Inf input."""


class TrainingDivergedError(SovMasError, RuntimeError):
    """Training aborted after too many consecutive non-finite steps."""


class CheckpointError(SovMasError, IOError):
    """A checkpoint container could not be read or written."""


class CorpusFormatError(InvalidInputError):
    """A corpus record failed validation. Names the file, line and field."""

    def __init__(
        self,
        message: str,
        path: str = "",
        line: Optional[int] = None,
        field: str = "",
    ) -> None:
        self.path = path
        self.line = line
        self.field = field
        where = path
        if line is not None:
            where = f"{where}:{line}"
        if field:
            where = f"{where} [{field}]"
        super().__init__(f"{where}: {message}" if where else message)
