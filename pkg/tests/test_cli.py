import orjson
import pytest

from cowkit.cli import EXIT_FAILURE, EXIT_INPUT, EXIT_LIMIT, EXIT_NEGATIVE, EXIT_OK, main
from cowkit.core.errors import CapacityError, CowkitError
from cowkit.services import capacity_service


@pytest.fixture(autouse=True)
def _workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _stdout_lines(capsys):
    return capsys.readouterr().out.splitlines()


# -----------------------------
# verify
# -----------------------------

def test_verify_builtins(capsys):
    assert main(["verify", "C4x5", "--method", "fast"]) == EXIT_OK
    assert _stdout_lines(capsys) == ["verdict cow method fast work 1"]
    assert main(["verify", "C8x13"]) == EXIT_OK
    assert _stdout_lines(capsys) == ["verdict cow method fast work 121"]


def test_verify_reports_a_witness(tmp_path, capsys, duplicate_column_text):
    (tmp_path / "dup.txt").write_text(duplicate_column_text)
    assert main(["verify", "dup.txt"]) == EXIT_NEGATIVE
    lines = _stdout_lines(capsys)
    assert lines[0].startswith("verdict not-errorless method fast")
    assert lines[1].startswith("witness ")


def test_verify_limits_and_structure(capsys):
    assert main(["verify", "D64x104", "--method", "fast"]) == EXIT_LIMIT
    assert main(["verify", "D64x104", "--method", "structural"]) == EXIT_OK
    assert _stdout_lines(capsys)[-1] == "verdict cow method structural work 121"


def test_verify_input_errors(tmp_path, capsys):
    assert main(["verify", "missing.txt"]) == EXIT_INPUT
    (tmp_path / "bad.txt").write_text("2 2 pm1\n+1 +1\n")
    assert main(["verify", "bad.txt"]) == EXIT_INPUT
    assert "Expected 2 rows" in capsys.readouterr().err


def test_verify_json(capsys):
    assert main(["verify", "C4x5", "--json"]) == EXIT_OK
    payload = orjson.loads(capsys.readouterr().out)
    assert payload["label"] == "cow"
    assert payload["work"] == 1


# -----------------------------
# construct
# -----------------------------

def test_construct_builtin_writes_files(tmp_path, capsys):
    assert main(["construct", "builtin", "C8x13"]) == EXIT_OK
    assert (tmp_path / "C8x13.txt").exists()
    assert (tmp_path / "C8x13.desc").exists()
    assert _stdout_lines(capsys)[0].startswith("C8x13 8x13 pm1")
    assert main(["verify", "C8x13.desc"]) == EXIT_OK


def test_construct_kron_then_verify(tmp_path, capsys):
    assert main(["construct", "kron", "--p", "H8", "--c", "C8x13", "--out", "D"]) == EXIT_OK
    assert (tmp_path / "D.desc").exists()
    capsys.readouterr()
    assert main(["verify", "D.desc"]) == EXIT_OK
    assert _stdout_lines(capsys) == ["verdict cow method structural work 121"]


def test_construct_optical_then_verify(tmp_path, capsys):
    assert main(["construct", "optical", "--m", "64"]) == EXIT_OK
    assert (tmp_path / "O64x69.desc").exists()
    capsys.readouterr()
    assert main(["verify", "O64x69.desc"]) == EXIT_OK
    assert _stdout_lines(capsys) == ["verdict coo method fast work 121"]


def test_construct_renames(tmp_path):
    assert main(["construct", "hadamard", "walsh", "--m", "4"]) == EXIT_OK
    assert "name walsh" in (tmp_path / "walsh.desc").read_text()


def test_construct_errors():
    assert main(["construct", "builtin", "C5x7"]) == EXIT_INPUT
    assert main(["construct", "optical"]) == EXIT_INPUT
    assert main(["construct", "kron", "--p", "H3", "--c", "C4x5"]) == EXIT_INPUT


# -----------------------------
# bounds
# -----------------------------

def test_bounds_single_value(capsys):
    assert main(["bounds", "--bound", "thm7", "--m", "4", "--n", "5"]) == EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(4.21, abs=0.01)


def test_bounds_csv(tmp_path, capsys):
    assert main(["bounds", "--bound", "thm7,thm8", "--m", "4", "--n", "5:1:7"]) == EXIT_OK
    lines = _stdout_lines(capsys)
    assert lines[0] == "m,n,bound,value_bits,aux"
    assert len(lines) == 7
    assert main(["bounds", "--bound", "thm6", "--m", "4:4:8", "--out", "users.csv"]) == EXIT_OK
    assert (tmp_path / "users.csv").read_text().count("\n") == 3


def test_bounds_needs_a_selection():
    assert main(["bounds", "--m", "4"]) == EXIT_INPUT


# -----------------------------
# decode / simulate
# -----------------------------

def test_decode_noiseless_word(tmp_path, capsys, c8x13):
    y = c8x13.array.sum(axis=1)
    (tmp_path / "y.txt").write_text(" ".join(str(int(v)) for v in y) + "\n")
    assert main(["decode", "--code", "C8x13", "--in", "y.txt"]) == EXIT_OK
    word, score = _stdout_lines(capsys)
    assert word.split() == ["+1"] * 13
    assert score == "score 0"


def test_decode_rejects_ragged_input(tmp_path):
    (tmp_path / "y.txt").write_text("1 2 3\n")
    assert main(["decode", "--code", "C8x13", "--in", "y.txt"]) == EXIT_INPUT


def test_simulate_csv(capsys):
    argv = ["simulate", "--code", "H8", "--decoder", "hadamard_baseline", "--ebn0", "0:2:4",
            "--max-trials", "200", "--min-errors", "10"]
    assert main(argv) == EXIT_OK
    lines = _stdout_lines(capsys)
    assert len(lines) == 4
    assert lines[0].startswith("code,decoder,ebn0_db")
    assert [line.split(",")[2] for line in lines[1:]] == ["0", "2", "4"]


def test_simulate_json(capsys):
    argv = ["simulate", "--code", "H8", "--decoder", "hadamard_baseline", "--ebn0", "3",
            "--max-trials", "100", "--json"]
    assert main(argv) == EXIT_OK
    payload = orjson.loads(capsys.readouterr().out)
    lo, hi = payload["ber_ci"]
    assert lo <= payload["ber"] <= hi
    assert payload["bpsk"] == pytest.approx(0.02288, rel=1e-3)


def test_simulate_from_config(tmp_path, capsys):
    (tmp_path / "sim.cfg").write_text("code H4\ndecoder hadamard_baseline\nebn0 1,2\nmax_trials 50\n")
    assert main(["simulate", "--config", "sim.cfg", "--out", "ber.csv"]) == EXIT_OK
    assert (tmp_path / "ber.csv").read_text().count("\n") == 3


def test_simulate_incompatible_decoder():
    assert main(["simulate", "--code", "C4x5", "--decoder", "tensor", "--ebn0", "0"]) == EXIT_INPUT


# -----------------------------
# misc
# -----------------------------

def test_selftest(capsys):
    assert main(["selftest"]) == EXIT_OK
    lines = _stdout_lines(capsys)
    assert lines
    assert all(line.startswith("ok") for line in lines)


def test_seed_is_echoed(capsys):
    main(["verify", "C4x5", "--seed", "7"])
    assert "seed 7" in capsys.readouterr().err


def test_unknown_option_exits():
    with pytest.raises(SystemExit):
        main(["verify", "C4x5", "--colour"])
    with pytest.raises(SystemExit):
        main(["verify", "C4x5", "--threads", "0"])


def test_negative_seed_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--code", "H8", "--decoder", "hadamard_baseline", "--ebn0", "0", "--seed", "-1"])
    assert exc.value.code == EXIT_INPUT


@pytest.mark.parametrize("error", [CapacityError("H3 pmf does not sum to one"), CowkitError("broken")])
def test_internal_failures_get_their_own_exit_code(monkeypatch, caplog, error):
    def fail(*args, **kwargs):
        raise error

    monkeypatch.setattr(capacity_service, "sweep", fail)
    assert main(["bounds", "--bound", "thm6", "--m", "4"]) == EXIT_FAILURE
    assert str(error) in caplog.text
