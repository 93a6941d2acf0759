# cowkit/core/matrix.py
"""
Exact-arithmetic matrix types shared by every cowkit service.

- SignMatrix (entries +1/-1) and BinaryMatrix (entries 0/1) are immutable, row-major.
- Everything that feeds an errorless verdict runs over Python ints and Fractions.
  Float views (`.array`, `RationalMatrix.to_float`) exist for the decoder and the
  channel simulator only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, List, Sequence, Tuple, Union

import numpy as np

from .errors import (
    AlphabetMismatchError,
    PreconditionError,
    SingularMatrixError,
    UnsupportedOrderError,
)

PM1 = "pm1"
BIN01 = "01"
ALPHABETS = (PM1, BIN01)

_SYMBOLS = {PM1: frozenset((1, -1)), BIN01: frozenset((0, 1))}

IntRows = Tuple[Tuple[int, ...], ...]


def _as_int_rows(data: Any) -> IntRows:
    if isinstance(data, np.ndarray):
        data = data.tolist()
    return tuple(tuple(int(v) for v in row) for row in data)


# -----------------------------
# Integer matrices
# -----------------------------

@dataclass(frozen=True)
class _IntegerMatrix:
    entries: IntRows

    alphabet = ""

    def __post_init__(self) -> None:
        rows = _as_int_rows(self.entries)
        object.__setattr__(self, "entries", rows)
        if not rows or not rows[0]:
            raise PreconditionError(f"{type(self).__name__} needs at least one row and one column")
        width = len(rows[0])
        allowed = _SYMBOLS[self.alphabet]
        for i, row in enumerate(rows):
            if len(row) != width:
                raise PreconditionError(f"row {i} has {len(row)} entries, expected {width}")
            for v in row:
                if v not in allowed:
                    raise PreconditionError(f"row {i} holds {v}, outside the {self.alphabet} alphabet")

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.array(self.entries, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_array(cls, arr: Any) -> "_IntegerMatrix":
        return cls(_as_int_rows(arr))

    def column(self, j: int) -> Tuple[int, ...]:
        return tuple(row[j] for row in self.entries)

    def select_columns(self, indices: Sequence[int]) -> "_IntegerMatrix":
        return type(self)(tuple(tuple(row[j] for j in indices) for row in self.entries))

    def select_rows(self, indices: Sequence[int]) -> "_IntegerMatrix":
        return type(self)(tuple(self.entries[i] for i in indices))

    def append_columns(self, columns: Sequence[Sequence[int]]) -> "_IntegerMatrix":
        cols = [tuple(int(v) for v in c) for c in columns]
        for c in cols:
            if len(c) != self.rows:
                raise PreconditionError(f"column of length {len(c)} cannot extend {self.rows} rows")
        return type(self)(
            tuple(row + tuple(c[i] for c in cols) for i, row in enumerate(self.entries))
        )

    def hstack(self, other: "_IntegerMatrix") -> "_IntegerMatrix":
        _check_same_alphabet(self, other)
        return self.append_columns([other.column(j) for j in range(other.cols)])

    def transpose(self) -> "_IntegerMatrix":
        return type(self)(tuple(zip(*self.entries)))


class SignMatrix(_IntegerMatrix):
    """An m x n signature matrix over {+1, -1}; columns are user signatures."""

    alphabet = PM1

    def negate_rows(self, indices: Sequence[int]) -> "SignMatrix":
        flip = set(indices)
        return SignMatrix(
            tuple(tuple(-v for v in row) if i in flip else row for i, row in enumerate(self.entries))
        )

    def negate_columns(self, indices: Sequence[int]) -> "SignMatrix":
        flip = set(indices)
        return SignMatrix(
            tuple(tuple(-v if j in flip else v for j, v in enumerate(row)) for row in self.entries)
        )


class BinaryMatrix(_IntegerMatrix):
    """An m x n optical signature matrix over {0, 1}."""

    alphabet = BIN01


CodeMatrix = Union[SignMatrix, BinaryMatrix]


def make_matrix(alphabet: str, rows: Any) -> CodeMatrix:
    if alphabet == PM1:
        return SignMatrix(rows)
    if alphabet == BIN01:
        return BinaryMatrix(rows)
    raise PreconditionError(f"unknown alphabet {alphabet!r} (expected one of {ALPHABETS})")


def _check_same_alphabet(a: _IntegerMatrix, b: _IntegerMatrix) -> None:
    if a.alphabet != b.alphabet:
        raise AlphabetMismatchError(f"cannot combine {a.alphabet} and {b.alphabet} matrices")


@dataclass(frozen=True)
class TernaryVector:
    """A {-1, 0, +1} vector: the search space of kernel witnesses."""

    entries: Tuple[int, ...]

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.entries)
        object.__setattr__(self, "entries", vals)
        for v in vals:
            if v not in (-1, 0, 1):
                raise PreconditionError(f"ternary vector holds {v}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_zero(self) -> bool:
        return not any(self.entries)


# -----------------------------
# Rational matrices
# -----------------------------

@dataclass(frozen=True)
class RationalMatrix:
    """Exact rational matrix; Fraction keeps every entry reduced with a positive denominator."""

    entries: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entries", tuple(tuple(Fraction(v) for v in row) for row in self.entries)
        )

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def matmul(self, other: Any) -> "RationalMatrix":
        rhs = _fraction_rows(other)
        if len(rhs) != self.cols:
            raise PreconditionError(f"shape mismatch: {self.rows}x{self.cols} times {len(rhs)} rows")
        width = len(rhs[0]) if rhs else 0
        return RationalMatrix(
            tuple(
                tuple(sum((row[k] * rhs[k][j] for k in range(self.cols)), Fraction(0)) for j in range(width))
                for row in self.entries
            )
        )

    def is_identity(self) -> bool:
        return self.rows == self.cols and all(
            v == (1 if i == j else 0) for i, row in enumerate(self.entries) for j, v in enumerate(row)
        )

    def common_denominator(self) -> int:
        den = 1
        for row in self.entries:
            for v in row:
                den = math.lcm(den, v.denominator)
        return den

    def scaled(self) -> Tuple[List[List[int]], int]:
        """Integer numerators N and denominator D with self == N / D."""
        den = self.common_denominator()
        return [[int(v * den) for v in row] for row in self.entries], den

    def to_float(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries], dtype=np.float64)


def _fraction_rows(data: Any) -> List[List[Fraction]]:
    if isinstance(data, RationalMatrix):
        return [list(row) for row in data.entries]
    if isinstance(data, _IntegerMatrix):
        data = data.entries
    elif isinstance(data, np.ndarray):
        data = data.tolist()
    return [[Fraction(v) for v in row] for row in data]


def _int_rows(data: Any) -> List[List[int]]:
    if isinstance(data, _IntegerMatrix):
        return [list(row) for row in data.entries]
    if isinstance(data, np.ndarray):
        data = data.tolist()
    return [[int(v) for v in row] for row in data]


# -----------------------------
# Constructors
# -----------------------------

def hadamard(k: int) -> SignMatrix:
    """Sylvester Hadamard matrix of order k: H_1 = [1], H_2k = H_2 (x) H_k."""
    if k < 1 or k & (k - 1):
        raise UnsupportedOrderError(f"Hadamard order {k} is not a power of two")
    h = np.ones((1, 1), dtype=np.int64)
    h2 = np.array([[1, 1], [1, -1]], dtype=np.int64)
    while h.shape[0] < k:
        h = np.kron(h2, h)
    return SignMatrix.from_array(h)


def identity(k: int) -> BinaryMatrix:
    if k < 1:
        raise PreconditionError("identity order must be positive")
    return BinaryMatrix.from_array(np.eye(k, dtype=np.int64))


def ones(m: int, n: int) -> BinaryMatrix:
    if m < 1 or n < 1:
        raise PreconditionError("all-ones matrix needs positive dimensions")
    return BinaryMatrix.from_array(np.ones((m, n), dtype=np.int64))


def kronecker(p: CodeMatrix, c: CodeMatrix) -> CodeMatrix:
    """Block (i, j) of the result is P[i][j] * C; both factors share one alphabet."""
    _check_same_alphabet(p, c)
    return type(c).from_array(np.kron(p.array, c.array))


def is_hadamard(h: Any) -> bool:
    arr = np.asarray(h.array if isinstance(h, _IntegerMatrix) else h, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    if not np.all(np.abs(arr) == 1):
        return False
    k = arr.shape[0]
    return bool(np.array_equal(arr @ arr.T, k * np.eye(k, dtype=np.int64)))


# -----------------------------
# Exact elimination
# -----------------------------

def _bareiss(rows: List[List[int]]) -> Tuple[List[int], int]:
    """
    Fraction-free forward elimination over the integers.

    Returns the pivot columns (greedy left to right, so the lexicographically first
    maximal independent set) and the signed last pivot, which is det(M) when M is
    square and non-singular. Every intermediate entry is a minor of M, so the
    division by the previous pivot is exact.
    """
    a = [list(r) for r in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    pivots: List[int] = []
    prev = 1
    sign = 1
    r = 0
    for c in range(n):
        if r == m:
            break
        p = next((i for i in range(r, m) if a[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[r], a[p] = a[p], a[r]
            sign = -sign
        row_r = a[r]
        piv = row_r[c]
        for i in range(r + 1, m):
            row_i = a[i]
            f = row_i[c]
            for j in range(c + 1, n):
                row_i[j] = (piv * row_i[j] - f * row_r[j]) // prev
            row_i[c] = 0
        prev = piv
        pivots.append(c)
        r += 1
    return pivots, sign * prev


def rank_and_basis_columns(matrix: Any) -> Tuple[int, List[int]]:
    """Exact rank and the lexicographically first maximal set of independent columns."""
    pivots, _ = _bareiss(_int_rows(matrix))
    return len(pivots), pivots


def determinant_exact(matrix: Any) -> int:
    rows = _int_rows(matrix)
    if len(rows) != len(rows[0]):
        raise PreconditionError(f"determinant of a {len(rows)}x{len(rows[0])} matrix")
    pivots, last = _bareiss(rows)
    return last if len(pivots) == len(rows) else 0


def _gauss_jordan(aug: List[List[Fraction]], n_pivot_cols: int) -> int:
    """In-place reduction of the leading n_pivot_cols columns; returns the rank found there."""
    m = len(aug)
    r = 0
    for c in range(n_pivot_cols):
        p = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        piv = aug[r][c]
        if piv != 1:
            aug[r] = [v / piv for v in aug[r]]
        row_r = aug[r]
        for i in range(m):
            if i == r:
                continue
            f = aug[i][c]
            if f:
                aug[i] = [vi - f * vr for vi, vr in zip(aug[i], row_r)]
        r += 1
    return r


def solve_exact(a: Any, b: Any) -> RationalMatrix:
    """Exact A^-1 B for square non-singular A."""
    left = _fraction_rows(a)
    right = _fraction_rows(b)
    n = len(left)
    if any(len(row) != n for row in left):
        raise PreconditionError(f"solve needs a square left factor, got {n}x{len(left[0])}")
    if len(right) != n:
        raise PreconditionError(f"right factor has {len(right)} rows, expected {n}")
    aug = [lrow + rrow for lrow, rrow in zip(left, right)]
    rank = _gauss_jordan(aug, n)
    if rank < n:
        raise SingularMatrixError(rank=rank, size=n)
    return RationalMatrix(tuple(tuple(row[n:]) for row in aug))


def invert_exact(matrix: Any) -> RationalMatrix:
    """Exact rational inverse; SingularMatrixError carries the rank otherwise."""
    rows = _fraction_rows(matrix)
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise PreconditionError(f"inverse of a {n}x{len(rows[0])} matrix")
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return solve_exact(rows, eye)


__all__ = [
    "PM1",
    "BIN01",
    "ALPHABETS",
    "SignMatrix",
    "BinaryMatrix",
    "CodeMatrix",
    "TernaryVector",
    "RationalMatrix",
    "make_matrix",
    "hadamard",
    "identity",
    "ones",
    "kronecker",
    "is_hadamard",
    "rank_and_basis_columns",
    "determinant_exact",
    "solve_exact",
    "invert_exact",
]
