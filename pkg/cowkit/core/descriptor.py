# cowkit/core/descriptor.py
"""
CodeDescriptor: a code matrix plus the algebraic structure the tensor decoder and
the structural verifier rely on.

Structures:
  - Plain        no structure recorded
  - Partitioned  basis columns forming an invertible square A; the rest form B
  - Kronecker    matrix == factor (x) inner.matrix, inner is itself a descriptor
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple, Union

import numpy as np

from .errors import PreconditionError
from .matrix import CodeMatrix, kronecker, rank_and_basis_columns


@dataclass(frozen=True)
class Plain:
    kind = "plain"


@dataclass(frozen=True)
class Partitioned:
    basis: Tuple[int, ...]

    kind = "part"

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(int(i) for i in self.basis))

    @classmethod
    def split(cls, m: int) -> "Partitioned":
        return cls(tuple(range(m)))

    @property
    def is_leading_split(self) -> bool:
        return self.basis == tuple(range(len(self.basis)))

    def free_columns(self, n: int) -> Tuple[int, ...]:
        chosen = set(self.basis)
        return tuple(j for j in range(n) if j not in chosen)

    def spelling(self) -> str:
        if self.is_leading_split:
            return str(len(self.basis))
        return ",".join(str(i) for i in self.basis)


@dataclass(frozen=True)
class Kronecker:
    factor: CodeMatrix
    inner: "CodeDescriptor"

    kind = "kron"


Structure = Union[Plain, Partitioned, Kronecker]

PLAIN = Plain()


@dataclass(frozen=True)
class CodeDescriptor:
    matrix: CodeMatrix
    structure: Structure = field(default=PLAIN)
    name: str = ""
    provenance: str = ""

    def __post_init__(self) -> None:
        s = self.structure
        if isinstance(s, Kronecker):
            if s.factor.rows != s.factor.cols:
                raise PreconditionError("kronecker factor must be square")
            if s.factor.alphabet != s.inner.alphabet:
                raise PreconditionError("kronecker factor and inner code use different alphabets")
            if kronecker(s.factor, s.inner.matrix) != self.matrix:
                raise PreconditionError("kronecker structure does not expand to the recorded matrix")
        elif isinstance(s, Partitioned):
            m, n = self.matrix.shape
            if len(s.basis) != m or len(set(s.basis)) != m or any(not 0 <= j < n for j in s.basis):
                raise PreconditionError(f"partition basis {list(s.basis)} is not {m} distinct columns of {n}")
            rank, _ = rank_and_basis_columns(self.matrix.select_columns(s.basis))
            if rank < m:
                raise PreconditionError(f"partition basis columns are singular (rank {rank} < {m})")

    @property
    def alphabet(self) -> str:
        return self.matrix.alphabet

    @property
    def rows(self) -> int:
        return self.matrix.rows

    @property
    def cols(self) -> int:
        return self.matrix.cols

    @property
    def array(self) -> np.ndarray:
        return self.matrix.array

    def renamed(self, name: str, provenance: str | None = None) -> "CodeDescriptor":
        return replace(self, name=name, provenance=self.provenance if provenance is None else provenance)

    def plain(self) -> "CodeDescriptor":
        return replace(self, structure=PLAIN)


__all__ = [
    "Plain",
    "Partitioned",
    "Kronecker",
    "Structure",
    "PLAIN",
    "CodeDescriptor",
]
