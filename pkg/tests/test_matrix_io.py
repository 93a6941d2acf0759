import numpy as np
import pytest

from cowkit.core.descriptor import Kronecker, Partitioned
from cowkit.core.errors import MatrixFormatError
from cowkit.core.matrix import BIN01, PM1
from cowkit.core.matrix_io import (
    format_matrix,
    format_word,
    parse_matrix,
    parse_range,
    parse_vector,
    read_descriptor,
    read_matrix,
    write_descriptor,
    write_matrix,
)
from cowkit.validators import (
    validate_descriptor_fields,
    validate_matrix_text,
    validate_sim_fields,
    validate_vector_text,
)

C4X5_TEXT = (
    "4 5 pm1\n"
    "+1 +1 +1 +1 +1\n"
    "+1 -1 +1 -1 +1\n"
    "+1 +1 -1 -1 +1\n"
    "+1 -1 -1 +1 -1\n"
)


def test_canonical_text_of_builtin(c4x5):
    assert format_matrix(c4x5.matrix) == C4X5_TEXT
    assert parse_matrix(C4X5_TEXT) == c4x5.matrix


def test_comments_and_bare_ones_accepted(c4x5):
    text = "# table one\n4 5 pm1\n\n1 1 1 1 1\n1 -1 1 -1 1\n# middle\n1 1 -1 -1 1\n1 -1 -1 1 -1\n"
    assert parse_matrix(text) == c4x5.matrix


def test_binary_matrix_text():
    m = parse_matrix("2 3 01\n1 0 1\n0 1 1\n")
    assert m.alphabet == BIN01
    assert format_matrix(m) == "2 3 01\n1 0 1\n0 1 1\n"


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("4 5\n", "header"),
        ("2 2 ternary\n1 1\n1 1\n", "alphabet"),
        ("2 2 pm1\n+1 +1\n", "Expected 2 rows"),
        ("2 2 pm1\n+1 +1\n+1 +1 +1\n", "expected 2 entries"),
        ("1 2 pm1\n+1 0\n", "not a pm1 symbol"),
        ("1 2 01\n1 -1\n", "not a 01 symbol"),
    ],
)
def test_matrix_validator_messages(text, fragment):
    errors = validate_matrix_text(text)
    assert errors
    assert any(fragment in e for e in errors)


def test_parse_errors_carry_the_validator_list():
    with pytest.raises(MatrixFormatError) as exc:
        parse_matrix("2 2 pm1\n+1 +1\n", source="bad.txt")
    assert exc.value.source == "bad.txt"
    assert exc.value.errors == ["Expected 2 rows, found 1."]


def test_matrix_file_io(tmp_path, c8x13):
    path = write_matrix(tmp_path / "sub" / "c.txt", c8x13.matrix)
    assert read_matrix(path) == c8x13.matrix


def test_vectors():
    v = parse_vector("1.5 -2\n# noise\n0.25\n")
    np.testing.assert_allclose(v, [1.5, -2.0, 0.25])
    assert validate_vector_text("1 nan") == ["Line 1: 'nan' is not finite."]
    assert validate_vector_text("") == ["Received vector is empty."]
    with pytest.raises(MatrixFormatError):
        parse_vector("1 x")


def test_format_word():
    assert format_word([1, -1, 1], PM1) == "+1 -1 +1"
    assert format_word([0, 1], BIN01) == "0 1"


@pytest.mark.parametrize(
    "text, expected",
    [
        ("0:2:12", [0, 2, 4, 6, 8, 10, 12]),
        ("0:0.5:1", [0, 0.5, 1]),
        ("1,3,5", [1, 3, 5]),
        ("7", [7]),
        ("-2:1:0", [-2, -1, 0]),
    ],
)
def test_parse_range(text, expected):
    assert parse_range(text) == pytest.approx(expected)


def test_parse_range_integer():
    assert parse_range("4:4:16", integer=True) == [4, 8, 12, 16]
    with pytest.raises(MatrixFormatError):
        parse_range("0.5", integer=True)


@pytest.mark.parametrize("text", ["", "1:2", "a:b:c", "5:1:0", "0:0:4"])
def test_parse_range_rejects(text):
    with pytest.raises(MatrixFormatError):
        parse_range(text)


def test_kron_descriptor_round_trip(tmp_path, d64x104):
    written = write_descriptor(tmp_path / "D", d64x104)
    names = sorted(p.name for p in written)
    assert names == sorted(["D.txt", "D.P.txt", "D.inner.txt", "D.inner.desc", "D.desc"])

    back = read_descriptor(tmp_path / "D.desc")
    assert back.matrix == d64x104.matrix
    assert isinstance(back.structure, Kronecker)
    assert back.structure.factor == d64x104.structure.factor
    inner = back.structure.inner
    assert isinstance(inner.structure, Partitioned)
    assert inner.structure.basis == (0, 1, 2, 3, 5, 6, 7, 8)
    assert back.name == "D64x104"


def test_partition_list_spelling(tmp_path, c8x13):
    write_descriptor(tmp_path / "c8.desc", c8x13)
    text = (tmp_path / "c8.desc").read_text()
    assert "structure part 0,1,2,3,5,6,7,8" in text
    assert "matrix c8.txt" in text


def test_leading_split_spelling(tmp_path, c4x5):
    write_descriptor(tmp_path / "c4", c4x5)
    assert "structure part 4" in (tmp_path / "c4.desc").read_text()


def test_descriptor_with_singular_partition(tmp_path):
    (tmp_path / "m.txt").write_text("2 3 pm1\n+1 +1 -1\n+1 +1 +1\n")
    (tmp_path / "m.desc").write_text("matrix m.txt\nstructure part 2\n")
    with pytest.raises(MatrixFormatError) as exc:
        read_descriptor(tmp_path / "m.desc")
    assert "singular" in str(exc.value)


def test_descriptor_name_defaults_to_stem(tmp_path):
    (tmp_path / "m.txt").write_text("2 2 pm1\n+1 +1\n+1 -1\n")
    (tmp_path / "two.desc").write_text("matrix m.txt\n")
    assert read_descriptor(tmp_path / "two.desc").name == "two"


def test_descriptor_validator():
    assert validate_descriptor_fields({"matrix": "a.txt", "structure": "plain"}) == []
    assert validate_descriptor_fields({"matrix": "a.txt", "structure": "part 0,1,3"}) == []
    errors = validate_descriptor_fields({"colour": "red", "structure": "kron P.txt"})
    assert "Unknown descriptor key 'colour'." in errors
    assert "Required field is missing: 'matrix'." in errors
    assert any("kron" in e for e in errors)
    assert validate_descriptor_fields({"matrix": "a", "structure": "part 0"}) == [
        "Partition split must be positive."
    ]


def test_sim_validator():
    assert validate_sim_fields({"code": "H8", "decoder": "ml", "seed": "0"}) == []
    errors = validate_sim_fields({"decoder": "viterbi", "max_trials": "0", "extra": "1"})
    assert "Required field is missing: 'code'." in errors
    assert "Unknown decoder 'viterbi'." in errors
    assert "Field 'max_trials' must be a positive integer." in errors
    assert "Unknown simulation key 'extra'." in errors
