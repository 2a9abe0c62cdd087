import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from schwarzdd.exceptions import DimensionError, SingularMatrixError, StructuralError
from schwarzdd.linalg import (SparseMatrix, csr_from_arrays, csr_from_triplets, extract_submatrix,
                              factorize, from_scipy, read_matrix_market, solve_factored, spmv,
                              write_matrix_market)


def test_triplets_empty():
    A = csr_from_triplets([], 2, 2)
    assert A.nnz == 0
    assert np.array_equal(A.to_dense(), np.zeros((2, 2)))


def test_triplets_duplicates_summed():
    A = csr_from_triplets([(0, 0, 1.0), (0, 0, 2.0)], 1, 1)
    assert A.nnz == 1 and A.values[0] == 3.0


def test_triplets_hand_sorted():
    A = csr_from_triplets([(0, 1, 2.0), (1, 0, 3.0), (0, 0, 1.0)], 2, 2)
    assert A.row_offsets.tolist() == [0, 2, 3]
    assert A.col_indices.tolist() == [0, 1, 0]
    assert A.values.tolist() == [1.0, 2.0, 3.0]


def test_triplets_out_of_range():
    with pytest.raises(StructuralError):
        csr_from_triplets([(2, 0, 1.0)], 2, 2)
    with pytest.raises(StructuralError):
        csr_from_triplets([(0, -1, 1.0)], 2, 2)


def test_invalid_csr_rejected():
    with pytest.raises(StructuralError):
        SparseMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])
    with pytest.raises(StructuralError):
        SparseMatrix(1, 2, [0, 2], [1, 0], [1.0, 1.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.data())
def test_triplets_match_scipy(n_rows, n_cols, data):
    k = data.draw(st.integers(0, 30))
    r = data.draw(st.lists(st.integers(0, n_rows - 1), min_size=k, max_size=k))
    c = data.draw(st.lists(st.integers(0, n_cols - 1), min_size=k, max_size=k))
    v = data.draw(st.lists(st.floats(-10, 10), min_size=k, max_size=k))
    A = csr_from_arrays(np.array(r, dtype=int), np.array(c, dtype=int), np.array(v), n_rows, n_cols)
    ref = sp.coo_matrix((v, (r, c)), shape=(n_rows, n_cols)).toarray()
    assert np.allclose(A.to_dense(), ref, atol=1e-12)
    assert np.all(np.diff(A.row_offsets) >= 0)
    for i in range(n_rows):
        cols = A.col_indices[A.row_offsets[i]:A.row_offsets[i + 1]]
        assert np.all(np.diff(cols) > 0)


def test_spmv_examples():
    I3 = from_scipy(sp.eye(3))
    assert spmv(I3, np.array([1.0, 2, 3])).tolist() == [1, 2, 3]
    Z = csr_from_triplets([], 3, 3)
    assert np.all(spmv(Z, np.ones(3)) == 0)
    A = from_scipy(np.array([[2.0, 1], [0, 3]]))
    assert spmv(A, np.ones(2)).tolist() == [3.0, 3.0]


def test_spmv_complex_and_mismatch(rng):
    M = sp.random(7, 5, density=0.4, random_state=1) + 1j * sp.random(7, 5, density=0.4, random_state=2)
    A = from_scipy(M)
    x = rng.standard_normal(5)
    assert np.allclose(spmv(A, x), M @ x)
    with pytest.raises(DimensionError):
        spmv(A, np.ones(7))


def test_extract_examples():
    A = from_scipy(np.diag([1.0, 2, 3]))
    assert np.array_equal(extract_submatrix(A, [0, 1, 2], [0, 1, 2]).to_dense(), A.to_dense())
    assert extract_submatrix(A, [], []).shape == (0, 0)
    assert np.array_equal(extract_submatrix(A, [0, 2], [0, 2]).to_dense(), np.diag([1.0, 3]))


def test_extract_matches_triple_product(rng):
    D = rng.standard_normal((9, 9)) * (rng.random((9, 9)) < 0.4)
    A = from_scipy(D)
    rows, cols = np.array([0, 3, 4, 8]), np.array([1, 3, 5, 6, 8])
    R = np.eye(9)[rows]
    C = np.eye(9)[cols]
    assert np.array_equal(extract_submatrix(A, rows, cols).to_dense(), R @ D @ C.T)


def test_extract_rejects_bad_sets():
    A = from_scipy(np.eye(3))
    with pytest.raises(StructuralError):
        extract_submatrix(A, [1, 0], [0, 1])
    with pytest.raises(StructuralError):
        extract_submatrix(A, [0, 3], [0])


def test_factorization_examples():
    I = from_scipy(sp.eye(4))
    b = np.arange(4.0)
    assert np.allclose(solve_factored(factorize(I), b), b)
    D = from_scipy(np.diag([2.0, 4.0]))
    assert np.allclose(factorize(D).solve(np.array([2.0, 4.0])), [1, 1])
    T = from_scipy(sp.diags([-1, 2, -1], [-1, 0, 1], shape=(5, 5)))
    x = np.arange(1.0, 6.0)
    assert np.allclose(factorize(T).solve(spmv(T, x)), x, rtol=1e-12)


def test_factorization_residual_complex(rng):
    M = sp.random(30, 30, density=0.2, random_state=3) + 10 * sp.eye(30)
    A = from_scipy(M * (1 + 0.5j))
    b = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    x = factorize(A).solve(b)
    assert np.linalg.norm(spmv(A, x) - b) <= 1e-10 * np.linalg.norm(b)


def test_real_factor_complex_rhs(rng):
    T = from_scipy(sp.diags([-1, 3, -1], [-1, 0, 1], shape=(6, 6)))
    b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x = factorize(T).solve(b)
    assert np.allclose(T.to_dense() @ x, b)


def test_singular_detected():
    A = from_scipy(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularMatrixError):
        factorize(A)


def test_matrix_market_roundtrip(tmp_path):
    A = csr_from_triplets([(0, 1, 2.5), (1, 0, -1.0), (1, 1, 4.0)], 2, 2)
    write_matrix_market(tmp_path / "a.mtx", A)
    B = read_matrix_market(tmp_path / "a.mtx")
    assert np.array_equal(A.to_dense(), B.to_dense())
