# cowkit/validators.py
from __future__ import annotations

import math
import re
from typing import Any, Mapping

# -----------------------------
# Helpers
# -----------------------------

_INT_RE = re.compile(r"^\d+$")
_PM1_TOKENS = {"+1": 1, "-1": -1, "1": 1}
_BIN_TOKENS = {"0": 0, "1": 1}

ALPHABET_TOKENS = {"pm1": _PM1_TOKENS, "01": _BIN_TOKENS}


def content_lines(text: str) -> list[tuple[int, str]]:
    """(1-based line number, stripped text) for every non-blank, non-comment line."""
    out: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append((lineno, line))
    return out


def _is_positive_int(tok: str) -> bool:
    return bool(_INT_RE.match(tok)) and int(tok) >= 1


# -----------------------------
# Matrix text
# -----------------------------

def validate_matrix_text(text: str) -> list[str]:
    """
    Validate the shared matrix text format.

    Contract:
      - first content line: `<m> <n> <alphabet>`, m, n positive, alphabet in {pm1, 01}
      - exactly m further content lines of n tokens each
      - pm1 tokens are +1/-1 (bare 1 tolerated), 01 tokens are 0/1
      - lines starting with '#' are comments

    Returns:
        A list of human-readable error strings. Empty list means "looks valid".
    """
    errors: list[str] = []
    lines = content_lines(text or "")
    if not lines:
        return ["Matrix text is empty."]

    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 3:
        return [f"Line {header_no}: header must be '<m> <n> <alphabet>', got '{header}'."]
    m_tok, n_tok, alphabet = parts
    if not _is_positive_int(m_tok) or not _is_positive_int(n_tok):
        errors.append(f"Line {header_no}: dimensions must be positive integers.")
    if alphabet not in ALPHABET_TOKENS:
        errors.append(f"Line {header_no}: alphabet must be 'pm1' or '01', got '{alphabet}'.")
    if errors:
        return errors

    m, n = int(m_tok), int(n_tok)
    tokens = ALPHABET_TOKENS[alphabet]
    body = lines[1:]
    if len(body) != m:
        errors.append(f"Expected {m} rows, found {len(body)}.")
    for lineno, line in body[:m]:
        row = line.split()
        if len(row) != n:
            errors.append(f"Line {lineno}: expected {n} entries, found {len(row)}.")
            continue
        bad = [t for t in row if t not in tokens]
        if bad:
            errors.append(f"Line {lineno}: '{bad[0]}' is not a {alphabet} symbol.")
    return errors


def validate_vector_text(text: str) -> list[str]:
    """Whitespace-separated finite reals (a received vector)."""
    errors: list[str] = []
    count = 0
    for lineno, line in content_lines(text or ""):
        for tok in line.split():
            count += 1
            try:
                val = float(tok)
            except ValueError:
                errors.append(f"Line {lineno}: '{tok}' is not a number.")
                continue
            if not math.isfinite(val):
                errors.append(f"Line {lineno}: '{tok}' is not finite.")
    if count == 0 and not errors:
        errors.append("Received vector is empty.")
    return errors


# -----------------------------
# Descriptor text
# -----------------------------

_DESCRIPTOR_KEYS = frozenset(["name", "matrix", "structure", "provenance"])


def validate_descriptor_fields(fields: Mapping[str, str]) -> list[str]:
    """
    Check a parsed `.desc` mapping.

    - `matrix` is required; `name`, `structure`, `provenance` are optional
    - structure is `plain`, `part <split>`, `part <i,j,...>` or `kron <P-file> <C-desc-file>`
    """
    errors: list[str] = []
    for key in fields:
        if key not in _DESCRIPTOR_KEYS:
            errors.append(f"Unknown descriptor key '{key}'.")
    if not fields.get("matrix", "").strip():
        errors.append("Required field is missing: 'matrix'.")

    structure = fields.get("structure", "plain").split()
    if not structure:
        errors.append("Field 'structure' is empty.")
    elif structure[0] == "plain":
        if len(structure) != 1:
            errors.append("'structure plain' takes no arguments.")
    elif structure[0] == "part":
        if len(structure) != 2:
            errors.append("'structure part' takes one argument.")
        else:
            items = structure[1].split(",")
            if not all(_INT_RE.match(x) for x in items):
                errors.append(f"Partition '{structure[1]}' must be an integer or a comma list.")
            elif len(items) == 1 and int(items[0]) < 1:
                errors.append("Partition split must be positive.")
    elif structure[0] == "kron":
        if len(structure) != 3:
            errors.append("'structure kron' takes <P-file> <C-descriptor-file>.")
    else:
        errors.append(f"Unknown structure kind '{structure[0]}'.")
    return errors


# -----------------------------
# Simulation config
# -----------------------------

_SIM_KEYS = frozenset(
    ["code", "decoder", "ebn0", "max_trials", "min_errors", "seed", "batch_size", "threads"]
)
_SIM_DECODERS = frozenset(["tensor", "ml", "hadamard_baseline", "block", "optical", "auto"])


def validate_sim_fields(fields: Mapping[str, Any]) -> list[str]:
    """Line-oriented `key value` simulation config, after splitting."""
    errors: list[str] = []
    for key in fields:
        if key not in _SIM_KEYS:
            errors.append(f"Unknown simulation key '{key}'.")
    if "code" not in fields:
        errors.append("Required field is missing: 'code'.")
    dec = fields.get("decoder")
    if dec is not None and dec not in _SIM_DECODERS:
        errors.append(f"Unknown decoder '{dec}'.")
    for key in ("max_trials", "min_errors", "batch_size", "threads"):
        if key in fields and not _is_positive_int(str(fields[key])):
            errors.append(f"Field '{key}' must be a positive integer.")
    if "seed" in fields and not _INT_RE.match(str(fields["seed"])):
        errors.append("Field 'seed' must be a non-negative integer.")
    return errors


__all__ = [
    "ALPHABET_TOKENS",
    "content_lines",
    "validate_matrix_text",
    "validate_vector_text",
    "validate_descriptor_fields",
    "validate_sim_fields",
]
