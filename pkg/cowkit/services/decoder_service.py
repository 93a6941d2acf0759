# cowkit/services/decoder_service.py
"""
Multi-user detection for errorless codes.

- ml_exhaustive   argmin over all 2^n inputs of ||Y - C X||^2
- decode_block    partitioned [A | B]: v = A^-1 y, then for each of the 2^(n-m)
                  free parts X2 take X1 = sign(v - A^-1 B X2) and keep the
                  candidate minimising ||(v - A^-1 B X2) - X1||
- decode_tensor   P (x) C: Y' = (P^-1 (x) I) Y splits into k independent blocks
- decode_optical  0/1 codes: 2Y - W with W = D 1, decoded with +1/-1 inputs

Fixed conventions: sign(0) = +1; argmin ties go to the smallest candidate index,
candidates counted in +1-first binary order.

Every decoder has a batch form (one received vector per row); the single-vector
forms wrap it.
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from ..core.descriptor import CodeDescriptor, Kronecker, Partitioned
from ..core.errors import LimitExceededError, PreconditionError, StructureError
from ..core.matrix import BIN01, PM1, CodeMatrix, invert_exact, is_hadamard, solve_exact
from ..core.schema import DecodedWord
from ..deps import get_settings

log = logging.getLogger(__name__)

_CHUNK_ENTRIES = 1 << 22  # floats per intermediate (N, candidates, m) block


def pm1_grid(k: int) -> np.ndarray:
    """All of {+1,-1}^k as rows, +1-first binary counter order (MSD first)."""
    idx = np.arange(1 << k, dtype=np.int64)[:, None]
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return (1 - 2 * ((idx >> shifts) & 1)).astype(np.int8)


def _rows_per_chunk(candidates: int, m: int) -> int:
    return max(1, _CHUNK_ENTRIES // max(1, candidates * m))


@dataclass(frozen=True)
class BatchResult:
    bits: np.ndarray  # (N, n) int8 in the code's input alphabet
    scores: np.ndarray  # (N,) squared residuals
    candidates: int  # distance evaluations per received vector


def _as_batch(y: np.ndarray, width: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise PreconditionError(f"received vectors must have {width} samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("received vector has non-finite samples")
    return arr


def _scores(matrix: np.ndarray, y: np.ndarray, bits: np.ndarray) -> np.ndarray:
    resid = y - bits.astype(np.float64) @ matrix.T
    return np.einsum("ij,ij->i", resid, resid)


def _word(result: BatchResult, alphabet: str = PM1) -> DecodedWord:
    return DecodedWord(
        bits=[int(b) for b in result.bits[0]],
        score=float(result.scores[0]),
        alphabet=alphabet,
        candidates=result.candidates,
    )


# -----------------------------
# Exhaustive ML
# -----------------------------

_ml_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=32), key=lambda matrix: hashkey(matrix), lock=_ml_lock)
def _ml_codebook(matrix: CodeMatrix) -> Tuple[np.ndarray, np.ndarray]:
    grid = pm1_grid(matrix.cols)
    images = grid.astype(np.float64) @ matrix.array.T.astype(np.float64)
    return grid, images


def _ml_raw(matrix: CodeMatrix, y: np.ndarray, max_users: Optional[int]) -> Tuple[np.ndarray, int]:
    limit = max_users if max_users is not None else get_settings().decoder.ml_max_users
    if matrix.cols > limit:
        raise LimitExceededError("exhaustive ML users", matrix.cols, limit)
    grid, images = _ml_codebook(matrix)
    out = np.empty((y.shape[0], matrix.cols), dtype=np.int8)
    step = _rows_per_chunk(grid.shape[0], matrix.rows)
    for s in range(0, y.shape[0], step):
        diff = y[s : s + step, None, :] - images[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        out[s : s + step] = grid[dist.argmin(axis=1)]
    return out, grid.shape[0]


def ml_exhaustive_batch(
    code: CodeDescriptor | CodeMatrix, y: np.ndarray, *, max_users: Optional[int] = None
) -> BatchResult:
    matrix = code.matrix if isinstance(code, CodeDescriptor) else code
    ys = _as_batch(y, matrix.rows)
    bits, cands = _ml_raw(matrix, ys, max_users)
    return BatchResult(bits, _scores(matrix.array.astype(np.float64), ys, bits), cands)


def ml_exhaustive(code: CodeDescriptor | CodeMatrix, y: np.ndarray, *, max_users: Optional[int] = None) -> DecodedWord:
    """argmin over X in {+1,-1}^n of ||Y - C X||^2; first candidate wins ties."""
    return _word(ml_exhaustive_batch(code, y, max_users=max_users))


# -----------------------------
# Partitioned block decoding
# -----------------------------

@dataclass(frozen=True)
class DecoderTables:
    """Lookup tables for a partitioned code; immutable and shareable across threads."""

    basis: Tuple[int, ...]
    free: Tuple[int, ...]
    matrix: np.ndarray  # C as floats, m x n
    a_inv: np.ndarray  # m x m
    a_inv_b: np.ndarray  # m x (n - m)
    x2: np.ndarray  # 2^(n-m) x (n - m), +1/-1
    table: np.ndarray  # 2^(n-m) x m, row t = A^-1 B x2[t]

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @classmethod
    def build(cls, code: CodeDescriptor, entry_cap: Optional[int] = None) -> "DecoderTables":
        if not isinstance(code.structure, Partitioned):
            raise StructureError(f"block decoding needs a partitioned code, {code.name or 'code'} has none")
        cap = entry_cap if entry_cap is not None else get_settings().decoder.table_entry_cap
        basis = code.structure.basis
        free = code.structure.free_columns(code.cols)
        m, k = code.rows, len(free)
        entries = (1 << k) * m
        if entries > cap:
            raise LimitExceededError("decoder table entries", entries, cap)

        a = code.matrix.select_columns(basis)
        a_inv = invert_exact(a).to_float()
        if k:
            a_inv_b = solve_exact(a, code.matrix.select_columns(free)).to_float()
        else:
            a_inv_b = np.zeros((m, 0), dtype=np.float64)
        x2 = pm1_grid(k)
        table = x2.astype(np.float64) @ a_inv_b.T
        for arr in (a_inv, a_inv_b, x2, table):
            arr.setflags(write=False)
        log.debug("decoder tables for %s: %d candidates", code.name or "code", 1 << k)
        return cls(basis, free, code.array.astype(np.float64), a_inv, a_inv_b, x2, table)


_tables_lock = threading.Lock()


@cached(
    cache=LRUCache(maxsize=32),
    key=lambda code, entry_cap=None: hashkey(code.matrix, code.structure, entry_cap),
    lock=_tables_lock,
)
def tables_for(code: CodeDescriptor, entry_cap: Optional[int] = None) -> DecoderTables:
    return DecoderTables.build(code, entry_cap)


def _block_raw(tables: DecoderTables, v: np.ndarray) -> np.ndarray:
    """Decode rows already mapped to the v = A^-1 y domain."""
    n_rows = v.shape[0]
    out = np.empty((n_rows, tables.n), dtype=np.int8)
    basis, free = list(tables.basis), list(tables.free)
    step = _rows_per_chunk(tables.size, tables.m)
    for s in range(0, n_rows, step):
        r = v[s : s + step, None, :] - tables.table[None, :, :]
        sg = np.where(r >= 0, 1.0, -1.0)
        d = r - sg
        dist = np.einsum("ijk,ijk->ij", d, d)
        best = dist.argmin(axis=1)
        rows = np.arange(best.shape[0])
        out[s : s + step, basis] = sg[rows, best].astype(np.int8)
        out[s : s + step, free] = tables.x2[best]
    return out


def decode_block_batch(tables: DecoderTables, y: np.ndarray, *, scale: float = 1.0) -> BatchResult:
    """`scale` decodes blocks of a code scaled by that factor (the unitary tensor form)."""
    ys = _as_batch(y, tables.m)
    v = ys @ (tables.a_inv / scale).T
    bits = _block_raw(tables, v)
    return BatchResult(bits, _scores(tables.matrix * scale, ys, bits), tables.size)


def decode_block(tables: DecoderTables, y_block: np.ndarray) -> DecodedWord:
    return _word(decode_block_batch(tables, y_block))


# -----------------------------
# Tensor decoding
# -----------------------------

_factor_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=32), key=lambda factor: hashkey(factor), lock=_factor_lock)
def _factor_inverse(factor: CodeMatrix) -> np.ndarray:
    if is_hadamard(factor):
        return factor.array.T.astype(np.float64) / factor.rows
    return invert_exact(factor).to_float()


def _inner_raw(inner: CodeDescriptor, y: np.ndarray, scale: float) -> Tuple[np.ndarray, int]:
    s = inner.structure
    if isinstance(s, Kronecker):
        return _tensor_raw(inner, y / scale)
    if isinstance(s, Partitioned):
        tables = tables_for(inner)
        return _block_raw(tables, y @ (tables.a_inv / scale).T), tables.size
    return _ml_raw(inner.matrix, y / scale, None)


def _tensor_raw(code: CodeDescriptor, y: np.ndarray, scale: float = 1.0) -> Tuple[np.ndarray, int]:
    s = code.structure
    assert isinstance(s, Kronecker)
    k = s.factor.rows
    m = s.inner.rows
    blocks = y.reshape(y.shape[0], k, m)
    # Y' = (P^-1 (x) I_m) Y, block by block
    decoupled = np.einsum("ij,njm->nim", _factor_inverse(s.factor) * scale, blocks)
    bits, cands = _inner_raw(s.inner, decoupled.reshape(-1, m), scale)
    return bits.reshape(y.shape[0], k * s.inner.cols), k * cands


def decode_tensor_batch(code: CodeDescriptor, y: np.ndarray, *, unitary: bool = False) -> BatchResult:
    """
    `unitary=True` scales the decoupled blocks by sqrt(k) (and the inner code with
    them), the form under which the block noise stays white for Hadamard P.
    """
    if not isinstance(code.structure, Kronecker):
        raise StructureError(
            "tensor decoding needs a kronecker-structured code; use decode_block or ml_exhaustive"
        )
    ys = _as_batch(y, code.rows)
    scale = math.sqrt(code.structure.factor.rows) if unitary else 1.0
    bits, cands = _tensor_raw(code, ys, scale)
    return BatchResult(bits, _scores(code.array.astype(np.float64), ys, bits), cands)


def decode_tensor(code: CodeDescriptor, y: np.ndarray, *, unitary: bool = False) -> DecodedWord:
    return _word(decode_tensor_batch(code, y, unitary=unitary))


# -----------------------------
# Optical codes and dispatch
# -----------------------------

def _pm1_raw(code: CodeDescriptor, y: np.ndarray) -> Tuple[np.ndarray, int]:
    s = code.structure
    if isinstance(s, Kronecker):
        return _tensor_raw(code, y)
    if isinstance(s, Partitioned):
        tables = tables_for(code)
        return _block_raw(tables, y @ tables.a_inv.T), tables.size
    return _ml_raw(code.matrix, y, None)


def decode_optical_batch(code: CodeDescriptor, y: np.ndarray) -> BatchResult:
    if code.alphabet != BIN01:
        raise PreconditionError(f"optical decoding needs a 0/1 code, got {code.alphabet}")
    ys = _as_batch(y, code.rows)
    w = code.array.sum(axis=1).astype(np.float64)
    pm1_bits, cands = _pm1_raw(code, 2.0 * ys - w[None, :])
    bits = ((pm1_bits + 1) // 2).astype(np.int8)
    return BatchResult(bits, _scores(code.array.astype(np.float64), ys, bits), cands)


def decode_optical(code: CodeDescriptor, y: np.ndarray) -> DecodedWord:
    """ML decoding of 2Y - W with +1/-1 inputs, mapped back by (b + 1) / 2."""
    return _word(decode_optical_batch(code, y), BIN01)


DECODERS = ("auto", "tensor", "block", "ml", "optical")


def batch_decoder(code: CodeDescriptor, name: str = "auto") -> Callable[[np.ndarray], BatchResult]:
    """Resolve a decoder for `code` up front, refusing incompatible pairs before any input arrives."""
    if name == "auto":
        if code.alphabet == BIN01:
            name = "optical"
        elif isinstance(code.structure, Kronecker):
            name = "tensor"
        elif isinstance(code.structure, Partitioned):
            name = "block"
        else:
            name = "ml"

    if name == "optical":
        if code.alphabet != BIN01:
            raise PreconditionError("optical decoder needs a 0/1 code")
        if not isinstance(code.structure, (Kronecker, Partitioned)):
            _ml_codebook_guard(code)
        return lambda y: decode_optical_batch(code, y)
    if code.alphabet != PM1:
        raise PreconditionError(f"decoder {name!r} needs a +1/-1 code; use optical")
    if name == "tensor":
        if not isinstance(code.structure, Kronecker):
            raise StructureError("tensor decoder needs a kronecker-structured code")
        return lambda y: decode_tensor_batch(code, y)
    if name == "block":
        tables = tables_for(code)
        return lambda y: decode_block_batch(tables, y)
    if name == "ml":
        _ml_codebook_guard(code)
        return lambda y: ml_exhaustive_batch(code, y)
    raise PreconditionError(f"unknown decoder {name!r} (known: {', '.join(DECODERS)})")


def _ml_codebook_guard(code: CodeDescriptor) -> None:
    limit = get_settings().decoder.ml_max_users
    if code.cols > limit:
        raise LimitExceededError("exhaustive ML users", code.cols, limit)


def decode_batch(code: CodeDescriptor, y: np.ndarray, decoder: str = "auto") -> BatchResult:
    return batch_decoder(code, decoder)(y)


def decode(code: CodeDescriptor, y: np.ndarray, decoder: str = "auto") -> DecodedWord:
    """Optical codes go to decode_optical, kronecker to decode_tensor, partitioned to decode_block, else ML."""
    result = decode_batch(code, y, decoder)
    return _word(result, code.alphabet if code.alphabet == BIN01 else PM1)


__all__ = [
    "pm1_grid",
    "BatchResult",
    "ml_exhaustive_batch",
    "ml_exhaustive",
    "DecoderTables",
    "tables_for",
    "decode_block_batch",
    "decode_block",
    "decode_tensor_batch",
    "decode_tensor",
    "decode_optical_batch",
    "decode_optical",
    "DECODERS",
    "batch_decoder",
    "decode_batch",
    "decode",
]
