# tests/conftest.py
from __future__ import annotations

import itertools
import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
os.environ.setdefault("COWKIT_SETTINGS", str(ROOT / "configs" / "settings.yaml"))

from cowkit.services.construct_service import builtin  # noqa: E402


# -----------------------------
# Independent oracles (never imported from the package)
# -----------------------------

def brute_force_kernel_witness(arr: np.ndarray):
    """First nonzero {-1,0,1} vector x with arr @ x == 0, or None."""
    arr = np.asarray(arr, dtype=np.int64)
    for x in itertools.product((-1, 0, 1), repeat=arr.shape[1]):
        if any(x) and not np.any(arr @ np.array(x, dtype=np.int64)):
            return x
    return None


def brute_force_ml(arr: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Loop-based ML over {+1,-1}^n; +1-first order, first minimum wins."""
    arr = np.asarray(arr, dtype=np.float64)
    best, best_d = None, None
    for x in itertools.product((1, -1), repeat=arr.shape[1]):
        r = y - arr @ np.array(x, dtype=np.float64)
        d = float(r @ r)
        if best_d is None or d < best_d:
            best, best_d = x, d
    return np.array(best, dtype=np.int8)


@pytest.fixture(scope="session")
def c4x5():
    return builtin("C4x5")


@pytest.fixture(scope="session")
def c8x13():
    return builtin("C8x13")


@pytest.fixture(scope="session")
def d64x104():
    return builtin("D64x104")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def duplicate_column_text() -> str:
    """C4x5 with its first column repeated: a 4x6 matrix that is not errorless."""
    return "\n".join(
        [
            "# duplicated first column",
            "4 6 pm1",
            "+1 +1 +1 +1 +1 +1",
            "+1 -1 +1 -1 +1 +1",
            "+1 +1 -1 -1 +1 +1",
            "+1 -1 -1 +1 -1 +1",
        ]
    ) + "\n"
