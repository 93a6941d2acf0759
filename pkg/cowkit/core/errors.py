# cowkit/core/errors.py
from __future__ import annotations

from typing import List, Optional


class CowkitError(Exception):
    """Base class for every error raised by cowkit."""


class UnsupportedOrderError(CowkitError):
    """Raised when a Hadamard order is not a power of two."""


class AlphabetMismatchError(CowkitError):
    """Raised when ±1 and 0/1 matrices are combined."""


class SingularMatrixError(CowkitError):
    """Raised when an exact inverse is requested for a singular matrix."""

    def __init__(self, rank: int, size: int):
        super().__init__(f"matrix of order {size} is singular (rank {rank})")
        self.rank = rank
        self.size = size


class PreconditionError(CowkitError):
    """Raised when an operation's hypothesis does not hold for its input."""


class StructureError(CowkitError):
    """Raised when a code descriptor lacks the structure an operation needs."""


class LimitExceededError(CowkitError):
    """Raised instead of silently truncating work that exceeds a configured limit."""

    def __init__(self, what: str, required: int, limit: int):
        super().__init__(f"{what}: requires {required}, limit is {limit}")
        self.what = what
        self.required = required
        self.limit = limit


class MatrixFormatError(CowkitError):
    """Raised when matrix, descriptor or config text fails validation."""

    def __init__(self, source: str, errors: Optional[List[str]] = None):
        self.source = source
        self.errors = list(errors or [])
        detail = "; ".join(self.errors) if self.errors else "unreadable"
        super().__init__(f"{source}: {detail}")


class CapacityError(CowkitError):
    """Raised when a numerical invariant of a bound computation is violated."""


__all__ = [
    "CowkitError",
    "UnsupportedOrderError",
    "AlphabetMismatchError",
    "SingularMatrixError",
    "PreconditionError",
    "StructureError",
    "LimitExceededError",
    "MatrixFormatError",
    "CapacityError",
]
