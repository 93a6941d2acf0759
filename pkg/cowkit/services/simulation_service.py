# cowkit/services/simulation_service.py
"""
Seeded Monte-Carlo BER over AWGN.

Convention: unit-amplitude chips, E_b = m, N_0 = 2 sigma^2, so
sigma^2 = m / (2 * 10^(EbN0_dB / 10)); under it the fully loaded Hadamard
system performs exactly as BPSK.

Batch b of grid point p draws from Philox(key = [seed, (p << 32) | b]). Batches
run in waves over a thread pool but are accumulated in batch order, and early
stopping is decided in that order too, so records do not depend on the worker
count.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import IO, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc

from ..core.descriptor import CodeDescriptor
from ..core.errors import MatrixFormatError, PreconditionError
from ..core.matrix import BIN01, CodeMatrix, is_hadamard
from ..core.matrix_io import parse_range
from ..core.schema import BerRecord, SimConfig
from ..deps import get_settings
from ..validators import content_lines, validate_sim_fields
from .construct_service import load_code
from .decoder_service import batch_decoder

log = logging.getLogger(__name__)


# -----------------------------
# Channel
# -----------------------------

def noise_sigma(ebn0_db: float, m: int) -> float:
    """Per-chip noise standard deviation; +inf dB gives a noiseless channel."""
    if m < 1:
        raise PreconditionError("noise_sigma needs m >= 1")
    if ebn0_db == math.inf:
        return 0.0
    return math.sqrt(m / (2.0 * 10.0 ** (ebn0_db / 10.0)))


def awgn(rng: np.random.Generator, shape: Union[int, Tuple[int, ...]], sigma: float) -> np.ndarray:
    if sigma == 0:
        return np.zeros(shape, dtype=np.float64)
    return sigma * rng.standard_normal(shape)


def qfunc(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2.0))


def bpsk_theoretical(ebn0_db: float) -> float:
    """Q(sqrt(2 Eb/N0)) = erfc(sqrt(Eb/N0)) / 2."""
    if ebn0_db == -math.inf:
        return 0.5
    return float(0.5 * erfc(math.sqrt(10.0 ** (ebn0_db / 10.0))))


def hadamard_baseline_batch(h: CodeMatrix, y: np.ndarray) -> np.ndarray:
    """Matched filter per user: bit_i = sign(column_i . Y), sign(0) = +1."""
    corr = np.atleast_2d(np.asarray(y, dtype=np.float64)) @ h.array.astype(np.float64)
    return np.where(corr >= 0, 1, -1).astype(np.int8)


def hadamard_baseline_decode(h: CodeMatrix, y: np.ndarray) -> List[int]:
    if not is_hadamard(h):
        raise PreconditionError("hadamard baseline needs a square Hadamard matrix")
    return [int(b) for b in hadamard_baseline_batch(h, y)[0]]


# -----------------------------
# Monte-Carlo points
# -----------------------------

_Decoder = Callable[[np.ndarray], np.ndarray]


def _resolve_decoder(code: CodeDescriptor, name: str) -> _Decoder:
    """Fails before any trial when decoder and code do not fit together."""
    if name == "hadamard_baseline":
        if not is_hadamard(code.matrix):
            raise PreconditionError(f"hadamard_baseline needs a square Hadamard code, {code.name} is not")
        return lambda y: hadamard_baseline_batch(code.matrix, y)
    dec = batch_decoder(code, name)
    return lambda y: dec(y).bits


def _batch_rng(seed: int, point: int, batch: int) -> np.random.Generator:
    key = np.array([seed, (point << 32) | batch], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_batch(
    code: CodeDescriptor, decode: _Decoder, sigma: float, seed: int, point: int, batch: int, trials: int
) -> int:
    rng = _batch_rng(seed, point, batch)
    bits = rng.integers(0, 2, size=(trials, code.cols), dtype=np.int8)
    x = bits if code.alphabet == BIN01 else (1 - 2 * bits).astype(np.int8)
    y = x.astype(np.float64) @ code.array.T.astype(np.float64)
    y += awgn(rng, y.shape, sigma)
    return int(np.count_nonzero(decode(y) != x))


def run_point(
    config: SimConfig,
    code: CodeDescriptor,
    ebn0_db: float,
    point_index: int = 0,
    *,
    decoder: Optional[_Decoder] = None,
) -> BerRecord:
    """Trials until `min_bit_errors` errors or `max_trials` vectors, whichever first."""
    decode = decoder or _resolve_decoder(code, config.decoder)
    sigma = noise_sigma(ebn0_db, code.rows)
    workers = config.threads or get_settings().worker_count()
    batch_size = config.batch_size
    n_batches = math.ceil(config.max_trials / batch_size)

    started = time.perf_counter()
    trials = errors = 0
    batch = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while batch < n_batches and errors < config.min_bit_errors:
            wave = range(batch, min(batch + workers, n_batches))
            sizes = [min(batch_size, config.max_trials - b * batch_size) for b in wave]
            futures = [
                pool.submit(_run_batch, code, decode, sigma, config.seed, point_index, b, t)
                for b, t in zip(wave, sizes)
            ]
            for fut, t in zip(futures, sizes):
                if errors >= config.min_bit_errors:
                    fut.cancel()
                    continue
                errors += fut.result()
                trials += t
                batch += 1

    bits = trials * code.cols
    record = BerRecord(
        code=code.name,
        decoder=config.decoder,
        ebn0_db=ebn0_db,
        trials=trials,
        bits=bits,
        bit_errors=errors,
        ber=errors / bits if bits else 0.0,
        seconds=time.perf_counter() - started,
    )
    log.info("%s/%s @ %.2f dB: %d errors in %d bits (ber %.3e)", record.code, record.decoder,
             ebn0_db, errors, bits, record.ber)
    return record


def run_sweep(config: SimConfig, code: Optional[CodeDescriptor] = None) -> List[BerRecord]:
    """One record per Eb/N0 grid point, in grid order."""
    code = code or load_code(config.code)
    decode = _resolve_decoder(code, config.decoder)
    return [run_point(config, code, db, i, decoder=decode) for i, db in enumerate(config.ebn0_db)]


# -----------------------------
# Post-processing
# -----------------------------

def ber_confidence_interval(record: BerRecord, z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval on the bit error rate."""
    n = record.bits
    if n == 0:
        return 0.0, 1.0
    p = record.bit_errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def required_ebn0(records: Sequence[BerRecord], target_ber: float) -> Optional[float]:
    """Eb/N0 where log10(BER) first crosses the target, linearly interpolated; None if it never does."""
    if not 0 < target_ber < 1:
        raise PreconditionError("target BER must lie in (0, 1)")
    pts = sorted(records, key=lambda r: r.ebn0_db)

    def logber(r: BerRecord) -> float:
        # half an error keeps error-free points finite
        return math.log10(max(r.ber, 0.5 / r.bits if r.bits else 1e-300))

    target = math.log10(target_ber)
    prev: Optional[BerRecord] = None
    for r in pts:
        cur = logber(r)
        if cur <= target:
            if prev is None:
                return r.ebn0_db
            lo = logber(prev)
            if lo == cur:
                return r.ebn0_db
            frac = (lo - target) / (lo - cur)
            return prev.ebn0_db + frac * (r.ebn0_db - prev.ebn0_db)
        prev = r
    return None


_SIM_KEY_MAP = {"min_errors": "min_bit_errors", "ebn0": "ebn0_db"}


def load_sim_config(path: Union[str, Path]) -> SimConfig:
    """Line-oriented `key value` file; keys mirror the simulate flags."""
    p = Path(path)
    fields: Dict[str, str] = {}
    for _, line in content_lines(p.read_text(encoding="utf-8")):
        key, _, value = line.partition(" ")
        fields[key.strip()] = value.strip()
    errors = validate_sim_fields(fields)
    if errors:
        raise MatrixFormatError(str(p), errors)

    data: Dict[str, object] = {}
    for key, value in fields.items():
        target = _SIM_KEY_MAP.get(key, key)
        if key == "ebn0":
            data[target] = parse_range(value)
        elif key in ("code", "decoder"):
            data[target] = value
        else:
            data[target] = int(value)
    cfg = get_settings().simulation
    data.setdefault("min_bit_errors", cfg.min_bit_errors)
    data.setdefault("max_trials", cfg.max_trials)
    data.setdefault("batch_size", cfg.batch_size)
    data.setdefault("seed", cfg.seed)
    return SimConfig.model_validate(data)


CSV_COLUMNS = ("code", "decoder", "ebn0_db", "trials", "bits", "bit_errors", "ber", "seconds")


def write_ber_csv(records: Iterable[BerRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [r.code, r.decoder, f"{r.ebn0_db:g}", r.trials, r.bits, r.bit_errors, f"{r.ber:.6e}", f"{r.seconds:.3f}"]
        )


__all__ = [
    "noise_sigma",
    "awgn",
    "qfunc",
    "bpsk_theoretical",
    "hadamard_baseline_batch",
    "hadamard_baseline_decode",
    "run_point",
    "run_sweep",
    "ber_confidence_interval",
    "required_ebn0",
    "load_sim_config",
    "CSV_COLUMNS",
    "write_ber_csv",
]
