"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage problems exit 1, data/format
problems exit 2, numerical failures exit 3.
"""

from __future__ import annotations


class BrainAlignError(Exception):
    """Base class for all package errors."""


class DataError(BrainAlignError):
    """Base for malformed or inconsistent input data (CLI exit 2)."""


class NumericalError(BrainAlignError):
    """Base for numerical failures (CLI exit 3)."""


class ValidationError(DataError):
    """A record violates its schema or a domain invariant."""


class FormatError(DataError):
    """A file cannot be decoded; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeError(DataError):
    """Tensor or sequence shapes are inconsistent with the operation."""


class DegenerateVector(NumericalError):
    """Cosine similarity requested for a zero-norm vector."""


class DegenerateMask(NumericalError):
    """A masked loss was requested with no masked positions."""


class EmptyCorpus(DataError):
    """An aggregate metric was requested over zero items."""


class UnknownSubject(DataError):
    """A brain signal references a subject with no registered adapter."""


class DivergenceError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite loss at step {step}")


class UsageError(BrainAlignError):
    """Bad command-line invocation (CLI exit 1)."""
