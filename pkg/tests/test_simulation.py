import io
import math

import numpy as np
import pytest

from cowkit.core.descriptor import CodeDescriptor
from cowkit.core.errors import MatrixFormatError, PreconditionError, StructureError
from cowkit.core.matrix import hadamard
from cowkit.core.matrix_io import parse_matrix
from cowkit.core.schema import BerRecord, SimConfig
from cowkit.services.construct_service import builtin
from cowkit.services.simulation_service import (
    CSV_COLUMNS,
    _batch_rng,
    awgn,
    ber_confidence_interval,
    bpsk_theoretical,
    hadamard_baseline_batch,
    hadamard_baseline_decode,
    load_sim_config,
    noise_sigma,
    qfunc,
    required_ebn0,
    run_point,
    run_sweep,
    write_ber_csv,
)


def _record(ebn0_db, ber, bits=10**6):
    return BerRecord(
        code="X", decoder="tensor", ebn0_db=ebn0_db, trials=bits, bits=bits,
        bit_errors=int(round(ber * bits)), ber=ber, seconds=0.0,
    )


# -----------------------------
# Channel
# -----------------------------

@pytest.mark.parametrize("ebn0, m, variance", [(0.0, 64, 32.0), (0.0, 1, 0.5), (10.0, 64, 3.2)])
def test_noise_sigma(ebn0, m, variance):
    assert noise_sigma(ebn0, m) ** 2 == pytest.approx(variance)


def test_noise_sigma_edges():
    assert noise_sigma(math.inf, 8) == 0.0
    with pytest.raises(PreconditionError):
        noise_sigma(0.0, 0)


def test_bpsk_reference_values():
    assert bpsk_theoretical(0.0) == pytest.approx(0.0786496, rel=1e-5)
    assert bpsk_theoretical(9.6) == pytest.approx(1e-5, rel=0.1)
    assert bpsk_theoretical(-math.inf) == 0.5
    assert float(qfunc(0.0)) == pytest.approx(0.5)


def test_awgn_moments(rng):
    z = awgn(rng, 10**6, 2.0)
    assert abs(z.mean()) < 0.01
    assert z.var() == pytest.approx(4.0, rel=0.01)
    assert not awgn(rng, (3, 4), 0.0).any()


# -----------------------------
# Hadamard baseline
# -----------------------------

def test_hadamard_baseline_noiseless():
    h = hadamard(16)
    bits = 1 - 2 * np.random.default_rng(5).integers(0, 2, size=(100, 16))
    ys = bits @ h.array.T
    np.testing.assert_array_equal(hadamard_baseline_batch(h, ys), bits)


def test_hadamard_baseline_sign_of_zero():
    h = hadamard(1)
    assert hadamard_baseline_decode(h, np.array([-0.2])) == [-1]
    assert hadamard_baseline_decode(h, np.array([0.0])) == [1]


def test_hadamard_baseline_needs_hadamard(c4x5):
    with pytest.raises(PreconditionError):
        hadamard_baseline_decode(c4x5.matrix, np.zeros(4))


# -----------------------------
# Monte-Carlo points
# -----------------------------

def test_single_trial_stop():
    cfg = SimConfig(code="H8", decoder="hadamard_baseline", min_bit_errors=1, max_trials=1, batch_size=10)
    rec = run_point(cfg, builtin("H8"), -5.0)
    assert rec.trials == 1
    assert rec.bits == 8


def test_results_do_not_depend_on_threads():
    base = dict(code="C8x13", decoder="block", max_trials=5000, min_bit_errors=50, batch_size=250, seed=9)
    one = run_sweep(SimConfig(**base, threads=1, ebn0_db=[2.0, 4.0]))
    four = run_sweep(SimConfig(**base, threads=4, ebn0_db=[2.0, 4.0]))
    assert [(r.trials, r.bit_errors) for r in one] == [(r.trials, r.bit_errors) for r in four]


def test_seed_changes_the_draws():
    base = dict(code="H8", decoder="hadamard_baseline", max_trials=2000, min_bit_errors=10**6, batch_size=500)
    a = run_point(SimConfig(**base, seed=1), builtin("H8"), 0.0)
    b = run_point(SimConfig(**base, seed=2), builtin("H8"), 0.0)
    assert a.trials == b.trials == 2000
    assert a.bit_errors != b.bit_errors


def test_batch_streams_are_unique_per_seed():
    first = {}
    for seed in range(4):
        for batch in range(4):
            first[(seed, batch)] = tuple(_batch_rng(seed, 0, batch).integers(0, 2**32, size=4))
    assert len(set(first.values())) == 16
    assert _batch_rng(1, 1, 0).integers(0, 2**32) != _batch_rng(1, 0, 0).integers(0, 2**32)


def test_seed_sweep_gives_distinct_error_counts():
    base = dict(code="H8", decoder="hadamard_baseline", max_trials=2000, min_bit_errors=10**6, batch_size=500)
    counts = {seed: run_point(SimConfig(**base, seed=seed), builtin("H8"), 0.0).bit_errors for seed in range(4)}
    assert len(set(counts.values())) > 1


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        SimConfig(code="H8", seed=-1)


def test_noiseless_tensor_decoding_is_error_free(d64x104):
    cfg = SimConfig(code="D64x104", decoder="tensor", max_trials=10_000, batch_size=2000)
    rec = run_point(cfg, d64x104, math.inf)
    assert rec.trials == 10_000
    assert rec.bit_errors == 0
    assert rec.ber == 0.0


def test_duplicate_column_code_errs_even_without_noise(duplicate_column_text):
    code = CodeDescriptor(parse_matrix(duplicate_column_text), name="dup")
    cfg = SimConfig(code="dup", decoder="ml", max_trials=1000, min_bit_errors=10**6, batch_size=100)
    rec = run_point(cfg, code, math.inf)
    assert rec.ber > 0


def test_empty_grid():
    assert run_sweep(SimConfig(code="H8", decoder="hadamard_baseline")) == []


def test_incompatible_decoder_fails_up_front():
    with pytest.raises(PreconditionError):
        run_sweep(SimConfig(code="C4x5", decoder="hadamard_baseline", ebn0_db=[0.0]))
    with pytest.raises(StructureError):
        run_sweep(SimConfig(code="C4x5", decoder="tensor", ebn0_db=[0.0]))


def test_config_rejects_non_finite_grid():
    with pytest.raises(ValueError):
        SimConfig(code="H8", ebn0_db=[0.0, float("nan")])


# -----------------------------
# Post-processing
# -----------------------------

def test_wilson_interval():
    lo, hi = ber_confidence_interval(_record(0.0, 0.01, bits=1000))
    assert lo < 0.01 < hi
    assert lo > 0.004
    assert hi < 0.02
    lo0, hi0 = ber_confidence_interval(_record(0.0, 0.0, bits=1000))
    assert lo0 == pytest.approx(0.0, abs=1e-12)
    assert 0 < hi0 < 0.01


def test_required_ebn0_interpolates_in_log_domain():
    curve = [_record(0.0, 1e-2), _record(2.0, 1e-4)]
    assert required_ebn0(curve, 1e-3) == pytest.approx(1.0)
    assert required_ebn0(curve, 1e-2) == pytest.approx(0.0)
    assert required_ebn0(curve, 1e-6) is None
    with pytest.raises(PreconditionError):
        required_ebn0(curve, 1.0)


def test_load_sim_config(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text(
        "# BER sweep\ncode H8\ndecoder hadamard_baseline\nebn0 0:2:4\nmin_errors 5\nmax_trials 100\n"
    )
    cfg = load_sim_config(path)
    assert cfg.code == "H8"
    assert cfg.ebn0_db == [0.0, 2.0, 4.0]
    assert cfg.min_bit_errors == 5
    assert cfg.max_trials == 100
    assert cfg.batch_size == 1000
    assert cfg.seed == 1


def test_load_sim_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text("code H8\ncolour red\n")
    with pytest.raises(MatrixFormatError) as exc:
        load_sim_config(path)
    assert "Unknown simulation key 'colour'." in exc.value.errors


def test_ber_csv():
    buf = io.StringIO()
    write_ber_csv([_record(2.0, 1e-3)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("X,tensor,2,1000000,1000000,1000,1.000000e-03,")


# -----------------------------
# Calibration
# -----------------------------

@pytest.mark.slow
@pytest.mark.parametrize("ebn0", [4.0, 6.0, 8.0])
def test_hadamard_matches_bpsk(ebn0):
    cfg = SimConfig(code="H64", decoder="hadamard_baseline", max_trials=200_000, min_bit_errors=300, batch_size=2000)
    rec = run_point(cfg, builtin("H64"), ebn0)
    assert rec.bit_errors >= 300
    p = bpsk_theoretical(ebn0)
    assert abs(rec.ber - p) <= 3 * math.sqrt(p * (1 - p) / rec.bits)


@pytest.mark.slow
def test_overloaded_code_costs_little_over_hadamard():
    grid = [float(x) for x in range(2, 12)]
    kw = dict(max_trials=50_000, min_bit_errors=200, batch_size=2000, ebn0_db=grid)
    d64 = run_sweep(SimConfig(code="D64x104", decoder="tensor", **kw))
    h64 = run_sweep(SimConfig(code="H64", decoder="hadamard_baseline", **kw))
    need_d = required_ebn0(d64, 1e-3)
    need_h = required_ebn0(h64, 1e-3)
    assert need_d is not None and need_h is not None
    assert need_d >= need_h - 0.5
    assert need_d - need_h <= 3.5
