"""
Exact matrix algebra: Sylvester construction, kronecker products, Bareiss rank
and determinant, Fraction solves.
"""
from fractions import Fraction

import numpy as np
import pytest

from cowkit.core.errors import (
    AlphabetMismatchError,
    PreconditionError,
    SingularMatrixError,
    UnsupportedOrderError,
)
from cowkit.core.matrix import (
    BIN01,
    PM1,
    BinaryMatrix,
    RationalMatrix,
    SignMatrix,
    TernaryVector,
    determinant_exact,
    hadamard,
    identity,
    invert_exact,
    is_hadamard,
    kronecker,
    make_matrix,
    ones,
    rank_and_basis_columns,
    solve_exact,
)


@pytest.mark.parametrize("k", [1, 2, 4, 8, 64])
def test_sylvester_hadamard_is_orthogonal(k):
    h = hadamard(k)
    assert h.shape == (k, k)
    assert is_hadamard(h)
    assert h.entries[0] == (1,) * k


def test_hadamard_small_orders():
    assert hadamard(1).entries == ((1,),)
    assert hadamard(2).entries == ((1, 1), (1, -1))


@pytest.mark.parametrize("k", [0, 3, 6, 12])
def test_hadamard_rejects_non_powers_of_two(k):
    with pytest.raises(UnsupportedOrderError):
        hadamard(k)


def test_sign_matrix_rejects_foreign_symbols():
    with pytest.raises(PreconditionError):
        SignMatrix(((1, 0), (1, 1)))
    with pytest.raises(PreconditionError):
        BinaryMatrix(((1, -1),))


def test_ragged_rows_rejected():
    with pytest.raises(PreconditionError):
        SignMatrix(((1, 1), (1,)))


def test_make_matrix_dispatches_on_alphabet():
    assert make_matrix(PM1, [[1, -1]]).alphabet == PM1
    assert make_matrix(BIN01, [[1, 0]]).alphabet == BIN01
    with pytest.raises(PreconditionError):
        make_matrix("ternary", [[1]])


def test_kronecker_blocks(c4x5):
    d = kronecker(hadamard(2), c4x5.matrix)
    assert d.shape == (8, 10)
    top, bottom = d.array[:4], d.array[4:]
    np.testing.assert_array_equal(top[:, :5], c4x5.array)
    np.testing.assert_array_equal(bottom[:, 5:], -c4x5.array)


def test_kronecker_refuses_mixed_alphabets():
    with pytest.raises(AlphabetMismatchError):
        kronecker(hadamard(2), identity(2))


def test_identity_and_ones():
    assert identity(3).entries == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert ones(2, 3).array.sum() == 6


def test_column_helpers(c4x5):
    m = c4x5.matrix
    assert m.column(4) == (1, 1, 1, -1)
    assert m.select_columns([0, 4]).shape == (4, 2)
    assert m.transpose().shape == (5, 4)
    assert m.append_columns([[1, 1, 1, 1]]).cols == 6
    with pytest.raises(PreconditionError):
        m.append_columns([[1, 1]])


def test_negation_keeps_alphabet(c4x5):
    m = c4x5.matrix
    flipped = m.negate_rows([1]).negate_columns([2])
    assert flipped.entries[1][0] == -1
    assert flipped.entries[0][2] == -1
    assert flipped.negate_rows([1]).negate_columns([2]) == m


def test_array_view_is_read_only(c4x5):
    with pytest.raises(ValueError):
        c4x5.matrix.array[0, 0] = 5


def test_ternary_vector():
    assert TernaryVector((0, 0)).is_zero
    assert not TernaryVector((0, -1)).is_zero
    with pytest.raises(PreconditionError):
        TernaryVector((2,))


def test_rank_and_basis_of_builtin_tables(c4x5, c8x13):
    rank, cols = rank_and_basis_columns(c4x5.matrix)
    assert (rank, cols) == (4, [0, 1, 2, 3])
    rank, cols = rank_and_basis_columns(c8x13.matrix)
    assert rank == 8
    assert len(cols) == 8
    assert cols[:4] == [0, 1, 2, 3]


def test_rank_of_rank_deficient_matrix():
    m = SignMatrix(((1, 1, -1), (1, 1, -1), (-1, -1, 1)))
    assert rank_and_basis_columns(m) == (1, [0])


def test_rank_matches_numpy_on_random_matrices(rng):
    for _ in range(50):
        arr = 1 - 2 * rng.integers(0, 2, size=(5, 7))
        rank, cols = rank_and_basis_columns(SignMatrix.from_array(arr))
        assert rank == np.linalg.matrix_rank(arr)
        assert np.linalg.matrix_rank(arr[:, cols]) == rank


def test_determinant_of_hadamard():
    assert determinant_exact(hadamard(2)) == -2
    assert determinant_exact(hadamard(4)) == 16


def test_determinant_matches_float_oracle(rng):
    for _ in range(50):
        arr = 1 - 2 * rng.integers(0, 2, size=(6, 6))
        assert determinant_exact(arr) == int(round(np.linalg.det(arr)))


def test_determinant_needs_square():
    with pytest.raises(PreconditionError):
        determinant_exact([[1, 1, 1], [1, -1, 1]])


def test_inverse_is_exact():
    h = hadamard(8)
    inv = invert_exact(h)
    assert inv.matmul(h).is_identity()
    assert inv.common_denominator() == 8


def test_inverse_of_h2_scaled():
    n, d = invert_exact(hadamard(2)).scaled()
    assert (n, d) == ([[1, 1], [1, -1]], 2)


def test_solve_matches_inverse_times_b(c8x13):
    basis = [0, 1, 2, 3, 5, 6, 7, 8]
    free = [4, 9, 10, 11, 12]
    a = c8x13.matrix.select_columns(basis)
    b = c8x13.matrix.select_columns(free)
    direct = solve_exact(a, b)
    via_inverse = invert_exact(a).matmul(b)
    assert direct == via_inverse


def test_singular_solve_reports_rank():
    with pytest.raises(SingularMatrixError) as exc:
        solve_exact([[1, 1], [1, 1]], [[1], [1]])
    assert exc.value.rank == 1
    assert exc.value.size == 2


def test_rational_matrix_to_float():
    r = RationalMatrix(((Fraction(1, 2), Fraction(-3, 4)),))
    np.testing.assert_allclose(r.to_float(), [[0.5, -0.75]])
