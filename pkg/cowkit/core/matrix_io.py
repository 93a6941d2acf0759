# cowkit/core/matrix_io.py
"""
Text formats.

Matrix file:
    <m> <n> <alphabet>        alphabet in {pm1, 01}
    m lines of n entries      +1/-1 or 0/1
    '#' starts a comment line

Descriptor file (.desc), one `key value` per line:
    name <name>
    matrix <matrix-file>
    structure plain | part <split or i,j,...> | kron <P-file> <C-descriptor-file>
    provenance <free text>
Paths resolve relative to the descriptor's directory.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from ..validators import (
    ALPHABET_TOKENS,
    content_lines,
    validate_descriptor_fields,
    validate_matrix_text,
    validate_vector_text,
)
from .descriptor import PLAIN, CodeDescriptor, Kronecker, Partitioned, Structure
from .errors import MatrixFormatError, PreconditionError
from .matrix import PM1, CodeMatrix, make_matrix

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


# -----------------------------
# Matrices
# -----------------------------

def parse_matrix(text: str, source: str = "<text>") -> CodeMatrix:
    errors = validate_matrix_text(text)
    if errors:
        raise MatrixFormatError(source, errors)
    lines = content_lines(text)
    _, _, alphabet = lines[0][1].split()
    tokens = ALPHABET_TOKENS[alphabet]
    rows = [[tokens[t] for t in line.split()] for _, line in lines[1:]]
    return make_matrix(alphabet, rows)


def _symbol(v: int, alphabet: str) -> str:
    if alphabet == PM1:
        return "+1" if v > 0 else "-1"
    return str(v)


def format_matrix(matrix: CodeMatrix) -> str:
    """Canonical text: header plus rows, no comments."""
    out = [f"{matrix.rows} {matrix.cols} {matrix.alphabet}"]
    for row in matrix.entries:
        out.append(" ".join(_symbol(v, matrix.alphabet) for v in row))
    return "\n".join(out) + "\n"


def read_matrix(path: PathLike) -> CodeMatrix:
    p = Path(path)
    return parse_matrix(p.read_text(encoding="utf-8"), source=str(p))


def write_matrix(path: PathLike, matrix: CodeMatrix) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_matrix(matrix), encoding="utf-8")
    return p


# -----------------------------
# Received vectors and decoded words
# -----------------------------

def parse_vector(text: str, source: str = "<text>") -> np.ndarray:
    errors = validate_vector_text(text)
    if errors:
        raise MatrixFormatError(source, errors)
    return np.array(
        [float(tok) for _, line in content_lines(text) for tok in line.split()], dtype=np.float64
    )


def read_vector(path: PathLike) -> np.ndarray:
    p = Path(path)
    return parse_vector(p.read_text(encoding="utf-8"), source=str(p))


def format_word(bits: Sequence[int], alphabet: str) -> str:
    return " ".join(_symbol(int(b), alphabet) for b in bits)


# -----------------------------
# Ranges
# -----------------------------

def parse_range(text: str, integer: bool = False) -> List[float]:
    """
    `start:step:stop` (inclusive), a comma list, or a single value.
    `integer=True` requires whole numbers and returns ints.
    """
    text = (text or "").strip()
    if not text:
        raise MatrixFormatError("range", ["empty range"])
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step <= 0 or stop < start:
                raise MatrixFormatError("range", [f"'{text}' needs step > 0 and stop >= start"])
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(count)]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise MatrixFormatError("range", [f"'{text}' is not start:step:stop or a comma list"]) from None
    if integer:
        if any(v != int(v) for v in values):
            raise MatrixFormatError("range", [f"'{text}' must hold whole numbers"])
        return [int(v) for v in values]
    return values


# -----------------------------
# Descriptors
# -----------------------------

def _parse_fields(text: str, source: str) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    for lineno, line in content_lines(text):
        key, _, value = line.partition(" ")
        if key in fields:
            raise MatrixFormatError(source, [f"Line {lineno}: duplicate key '{key}'."])
        fields[key] = value.strip()
    return fields


def _parse_partition(arg: str) -> Partitioned:
    items = [int(x) for x in arg.split(",")]
    if len(items) == 1:
        return Partitioned.split(items[0])
    return Partitioned(tuple(items))


def read_descriptor(path: PathLike) -> CodeDescriptor:
    p = Path(path)
    source = str(p)
    fields = _parse_fields(p.read_text(encoding="utf-8"), source)
    errors = validate_descriptor_fields(fields)
    if errors:
        raise MatrixFormatError(source, errors)

    base = p.parent
    matrix = read_matrix(base / fields["matrix"])
    parts = fields.get("structure", "plain").split()
    structure: Structure = PLAIN
    if parts[0] == "part":
        structure = _parse_partition(parts[1])
    elif parts[0] == "kron":
        structure = Kronecker(read_matrix(base / parts[1]), read_descriptor(base / parts[2]))

    try:
        return CodeDescriptor(
            matrix=matrix,
            structure=structure,
            name=fields.get("name", p.stem),
            provenance=fields.get("provenance", ""),
        )
    except PreconditionError as e:
        raise MatrixFormatError(source, [str(e)]) from e


def format_descriptor(desc: CodeDescriptor, matrix_file: str, extra: Sequence[str] = ()) -> str:
    lines = [f"name {desc.name}" if desc.name else "", f"matrix {matrix_file}"]
    s = desc.structure
    if isinstance(s, Partitioned):
        lines.append(f"structure part {s.spelling()}")
    elif isinstance(s, Kronecker):
        lines.append(f"structure kron {extra[0]} {extra[1]}")
    else:
        lines.append("structure plain")
    if desc.provenance:
        lines.append(f"provenance {desc.provenance}")
    return "\n".join(line for line in lines if line) + "\n"


def write_descriptor(path: PathLike, desc: CodeDescriptor) -> List[Path]:
    """Write `<stem>.desc` with its matrix file (and factor files for kron); returns every path written."""
    p = Path(path)
    if p.suffix != ".desc":
        p = p.with_suffix(".desc")
    stem = p.with_suffix("")
    written: List[Path] = [write_matrix(Path(f"{stem}.txt"), desc.matrix)]
    extra: List[str] = []
    s = desc.structure
    if isinstance(s, Kronecker):
        p_file = write_matrix(Path(f"{stem}.P.txt"), s.factor)
        inner = write_descriptor(Path(f"{stem}.inner.desc"), s.inner)
        written += [p_file, *inner]
        extra = [p_file.name, inner[-1].name]
    p.write_text(format_descriptor(desc, written[0].name, extra), encoding="utf-8")
    written.append(p)
    log.debug("wrote descriptor %s (%d files)", p, len(written))
    return written


__all__ = [
    "parse_matrix",
    "format_matrix",
    "read_matrix",
    "write_matrix",
    "parse_vector",
    "read_vector",
    "format_word",
    "parse_range",
    "read_descriptor",
    "format_descriptor",
    "write_descriptor",
]
