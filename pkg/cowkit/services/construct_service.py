# cowkit/services/construct_service.py
"""
Constructions of errorless codes.

- builtin            literal 4x5 and 8x13 COW matrices, their 64x104 kronecker
                     lift, plus H<k> (Sylvester Hadamard) and I<k> (identity)
- kronecker_lift     P (x) C keeps C errorless when P is invertible
- augment_columns    H2 (x) C plus greedily accepted extra columns
- optical_geometric  [J - I | V_0 .. V_d] over {0, 1}
- cow_to_coo / coo_to_cow / normalize_first_row_col   alphabet and sign moves
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator, List, Optional

import numpy as np

from ..core.descriptor import PLAIN, CodeDescriptor, Kronecker, Partitioned, Structure
from ..core.errors import CowkitError, PreconditionError
from ..core.matrix import (
    BIN01,
    PM1,
    BinaryMatrix,
    CodeMatrix,
    SignMatrix,
    hadamard,
    identity,
    kronecker,
    make_matrix,
    rank_and_basis_columns,
)
from ..core.matrix_io import read_descriptor, read_matrix
from ..deps import get_settings
from .verify_service import verify, verify_fast

log = logging.getLogger(__name__)


# -----------------------------
# Literal matrices
# -----------------------------

_C4X5 = (
    (1, 1, 1, 1, 1),
    (1, -1, 1, -1, 1),
    (1, 1, -1, -1, 1),
    (1, -1, -1, 1, -1),
)

_C8X13 = (
    (1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1),
    (1, -1, 1, -1, 1, 1, -1, 1, -1, 1, 1, -1, 1),
    (1, 1, -1, -1, 1, 1, 1, -1, -1, 1, -1, 1, -1),
    (1, -1, -1, 1, -1, 1, -1, -1, 1, -1, -1, 1, 1),
    (1, 1, 1, 1, 1, -1, -1, -1, -1, -1, 1, -1, 1),
    (1, -1, 1, -1, 1, -1, 1, -1, 1, -1, -1, -1, -1),
    (1, 1, -1, -1, 1, -1, -1, 1, 1, -1, -1, -1, 1),
    (1, -1, -1, 1, -1, -1, 1, 1, -1, 1, 1, -1, -1),
)

# Columns 0..3 of the 4x5 code are H4; columns {0,1,2,3,5,6,7,8} of the 8x13 code are H8.
_C4X5_BASIS = (0, 1, 2, 3)
_C8X13_BASIS = (0, 1, 2, 3, 5, 6, 7, 8)

BUILTIN_NAMES = ("C4x5", "C8x13", "D64x104")

_ORDER_RE = re.compile(r"^([HI])(\d+)$")


def _raw_builtin(name: str) -> CodeDescriptor:
    if name == "C4x5":
        return CodeDescriptor(SignMatrix(_C4X5), Partitioned(_C4X5_BASIS), "C4x5", "builtin 4x5 COW table")
    if name == "C8x13":
        return CodeDescriptor(SignMatrix(_C8X13), Partitioned(_C8X13_BASIS), "C8x13", "builtin 8x13 COW table")
    if name == "D64x104":
        return kronecker_lift(hadamard(8), builtin("C8x13"), name="D64x104")
    match = _ORDER_RE.match(name)
    if match:
        k = int(match.group(2))
        if match.group(1) == "H":
            return CodeDescriptor(hadamard(k), Partitioned.split(k), name, "sylvester hadamard")
        return CodeDescriptor(identity(k), Partitioned.split(k), name, "identity")
    raise PreconditionError(f"unknown built-in code {name!r} (known: {', '.join(BUILTIN_NAMES)}, H<k>, I<k>)")


@lru_cache(maxsize=64)
def builtin(name: str) -> CodeDescriptor:
    """Built-in code by name; the literal tables are verified once per process."""
    desc = _raw_builtin(name)
    if name in BUILTIN_NAMES:
        verdict = verify(desc)
        if not verdict.is_errorless:
            raise CowkitError(f"built-in {name} failed its self-check: {verdict.line()}")
        log.debug("built-in %s self-check: %s", name, verdict.line())
    return desc


def is_builtin_name(name: str) -> bool:
    return name in BUILTIN_NAMES or bool(_ORDER_RE.match(name))


def load_code(ref: str) -> CodeDescriptor:
    """A built-in name, a `.desc` descriptor file or a bare matrix file."""
    if is_builtin_name(ref):
        return builtin(ref)
    path = Path(ref)
    if path.suffix == ".desc":
        return read_descriptor(path)
    return CodeDescriptor(read_matrix(path), PLAIN, path.stem, f"file {path.name}")


def load_factor(ref: str) -> CodeMatrix:
    if is_builtin_name(ref):
        return builtin(ref).matrix
    return read_matrix(ref)


# -----------------------------
# Partition bookkeeping
# -----------------------------

def _partition_for(matrix: CodeMatrix, keep: Optional[Structure] = None) -> Structure:
    """Keep a partition whose basis is still invertible; otherwise pick the first independent columns."""
    if isinstance(keep, Partitioned):
        rank, _ = rank_and_basis_columns(matrix.select_columns(keep.basis))
        if rank == matrix.rows:
            return keep
    rank, cols = rank_and_basis_columns(matrix)
    if rank == matrix.rows:
        return Partitioned(tuple(cols))
    return PLAIN


def _require(desc: CodeDescriptor, alphabet: str, op: str) -> None:
    if desc.alphabet != alphabet:
        raise PreconditionError(f"{op} needs a {alphabet} code, got {desc.alphabet}")


# -----------------------------
# Sign and alphabet moves
# -----------------------------

def normalize_first_row_col(code: CodeDescriptor) -> CodeDescriptor:
    """Negate columns, then rows, until the first row and first column are all +1."""
    _require(code, PM1, "normalize_first_row_col")
    matrix: SignMatrix = code.matrix  # type: ignore[assignment]
    matrix = matrix.negate_columns([j for j, v in enumerate(matrix.entries[0]) if v < 0])
    matrix = matrix.negate_rows([i for i, row in enumerate(matrix.entries) if row[0] < 0])
    structure = code.structure if isinstance(code.structure, Partitioned) else PLAIN
    return CodeDescriptor(matrix, structure, code.name, code.provenance)


def cow_to_coo(code: CodeDescriptor) -> CodeDescriptor:
    """First row normalized to +1, then D = (J + C) / 2."""
    _require(code, PM1, "cow_to_coo")
    matrix: SignMatrix = code.matrix  # type: ignore[assignment]
    matrix = matrix.negate_columns([j for j, v in enumerate(matrix.entries[0]) if v < 0])
    optical = BinaryMatrix.from_array((matrix.array + 1) // 2)
    return CodeDescriptor(
        optical,
        _partition_for(optical, code.structure),
        f"{code.name}-coo" if code.name else "",
        "cow_to_coo",
    )


def coo_to_cow(code: CodeDescriptor) -> CodeDescriptor:
    """C = 2D - J; D must carry an all-ones row."""
    _require(code, BIN01, "coo_to_cow")
    if not any(all(v == 1 for v in row) for row in code.matrix.entries):
        raise PreconditionError("coo_to_cow needs a row of all ones")
    signed = SignMatrix.from_array(2 * code.matrix.array - 1)
    name = code.name[:-4] if code.name.endswith("-coo") else (f"{code.name}-cow" if code.name else "")
    return CodeDescriptor(signed, _partition_for(signed, code.structure), name, "coo_to_cow")


# -----------------------------
# Structured constructions
# -----------------------------

def kronecker_lift(factor: CodeMatrix, inner: CodeDescriptor, name: Optional[str] = None) -> CodeDescriptor:
    """P (x) C with the kronecker structure recorded; P must be square and invertible."""
    if factor.rows != factor.cols:
        raise PreconditionError(f"kronecker factor must be square, got {factor.rows}x{factor.cols}")
    rank, _ = rank_and_basis_columns(factor)
    if rank < factor.rows:
        raise PreconditionError(f"kronecker factor is singular (rank {rank} < {factor.rows})")
    matrix = kronecker(factor, inner.matrix)
    label = name or f"K{factor.rows}({inner.name or 'C'})"
    return CodeDescriptor(matrix, Kronecker(factor, inner), label, f"kronecker lift of {inner.name or 'code'}")


def optical_geometric(m: int) -> CodeDescriptor:
    """[J - I | V_0 .. V_d] with d = ceil(log2 m) - 2 and V_i holding 2^i leading ones."""
    if m < 4:
        raise PreconditionError(f"optical construction needs m >= 4, got {m}")
    d = (m - 1).bit_length() - 2
    a = np.ones((m, m), dtype=np.int64) - np.eye(m, dtype=np.int64)
    v = np.zeros((m, d + 1), dtype=np.int64)
    for i in range(d + 1):
        v[: 2**i, i] = 1
    matrix = BinaryMatrix.from_array(np.hstack([a, v]))
    return CodeDescriptor(matrix, Partitioned.split(m), f"O{m}x{m + d + 1}", "optical geometric")


def hadamard_repetition(m: int, n: int) -> CodeDescriptor:
    """Every Sylvester Hadamard column repeated n/m times (blockwise)."""
    if n % m:
        raise PreconditionError(f"hadamard repetition needs m | n, got m={m}, n={n}")
    h = hadamard(m)
    matrix = SignMatrix.from_array(np.tile(h.array, (1, n // m)))
    return CodeDescriptor(matrix, Partitioned.split(m), f"R{m}x{n}", "hadamard repetition")


def random_code(m: int, n: int, alphabet: str = PM1, seed: int = 0) -> CodeDescriptor:
    if m < 1 or n < 1:
        raise PreconditionError("random code needs positive dimensions")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(m, n))
    arr = 2 * bits - 1 if alphabet == PM1 else bits
    return CodeDescriptor(make_matrix(alphabet, arr), PLAIN, f"random{m}x{n}", f"random seed {seed}")


def augmentation_floor(m: int) -> int:
    """Smallest k with 3^k >= 2^(m-1), i.e. ceil((m - 1) log3 2)."""
    if m < 1:
        raise PreconditionError("augmentation floor needs m >= 1")
    k, power, target = 0, 1, 1 << (m - 1)
    while power < target:
        power *= 3
        k += 1
    return k


def overloading_factor(m: int, n: int) -> float:
    return n / m - 1


# -----------------------------
# Greedy augmentation
# -----------------------------

_PERMUTE_MAX_BITS = 20


@dataclass(frozen=True)
class AugmentResult:
    descriptor: CodeDescriptor
    added: int
    floor: int
    drawn: int
    budget_exhausted: bool
    space_exhausted: bool


def _candidates(free_bits: int, rng: np.random.Generator) -> Iterator[List[int]]:
    """Candidate tails over {+1,-1}^free_bits, each drawn at most once."""
    if free_bits <= _PERMUTE_MAX_BITS:
        for idx in rng.permutation(1 << free_bits):
            idx = int(idx)
            yield [1 - 2 * ((idx >> (free_bits - 1 - j)) & 1) for j in range(free_bits)]
        return
    seen = set()
    while True:
        bits = rng.integers(0, 2, size=free_bits, dtype=np.int8)
        key = bits.tobytes()
        if key in seen:
            continue
        seen.add(key)
        yield [1 - 2 * int(b) for b in bits]


def augment_columns(
    code: CodeDescriptor,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
    target: Optional[int] = None,
    *,
    work_limit: Optional[int] = None,
) -> AugmentResult:
    """
    Form D = H2 (x) C and append candidate columns Z with Z[0] = +1, accepting Z iff
    the fast check still passes. A rejected Z stays rejected: adding columns only
    enlarges the set of kernel vectors.
    """
    _require(code, PM1, "augment_columns")
    cfg = get_settings().construct_cfg
    budget = budget if budget is not None else cfg.augment_budget
    seed = seed if seed is not None else cfg.augment_seed
    m = code.rows
    floor = augmentation_floor(m)
    target = floor if target is None else target

    base = kronecker(hadamard(2), code.matrix)
    rows = base.rows
    n = code.cols
    if isinstance(code.structure, Partitioned):
        basis: Optional[tuple] = code.structure.basis + tuple(n + j for j in code.structure.basis)
    else:
        basis = None

    rng = np.random.default_rng(seed)
    current: CodeMatrix = base
    added = drawn = 0
    space_exhausted = True
    for tail in _candidates(rows - 1, rng):
        if added >= target or drawn >= budget:
            space_exhausted = False
            break
        drawn += 1
        trial = current.append_columns([[1, *tail]])
        if verify_fast(trial, work_limit=work_limit).is_errorless:
            current = trial
            added += 1
            log.info("augment %s: accepted column %d after %d draws", code.name or "code", added, drawn)

    budget_exhausted = added < target and drawn >= budget
    if added == 0:
        desc = kronecker_lift(hadamard(2), code, name=f"A{rows}x{current.cols}")
    else:
        structure = Partitioned(basis) if basis is not None else _partition_for(current)
        provenance = f"augmented from {code.name or 'code'} seed {seed}"
        desc = CodeDescriptor(current, structure, f"A{rows}x{current.cols}", provenance)
    if added < floor:
        log.warning("augment %s: %d of %d guaranteed columns within %d draws", code.name or "code", added, floor, drawn)
    return AugmentResult(desc, added, floor, drawn, budget_exhausted, space_exhausted and added < target)


__all__ = [
    "BUILTIN_NAMES",
    "builtin",
    "is_builtin_name",
    "load_code",
    "load_factor",
    "normalize_first_row_col",
    "cow_to_coo",
    "coo_to_cow",
    "kronecker_lift",
    "optical_geometric",
    "hadamard_repetition",
    "random_code",
    "augmentation_floor",
    "overloading_factor",
    "AugmentResult",
    "augment_columns",
]
