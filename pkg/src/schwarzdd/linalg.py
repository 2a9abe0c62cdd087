"""Compressed sparse row matrices and sparse direct solves.

The scalar field of a matrix is its numpy dtype: ``float64`` for Poisson
type problems and ``complex128`` for Helmholtz. All matrices and vectors
taking part in one solve share one field.
"""
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .exceptions import DimensionError, SingularMatrixError, StructuralError

INDEX = np.int64
FIELDS = (np.dtype(np.float64), np.dtype(np.complex128))


def scalar_field(*arrays):
    """Smallest of float64/complex128 holding every argument's values."""
    if any(np.iscomplexobj(a) for a in arrays):
        return np.dtype(np.complex128)
    return np.dtype(np.float64)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """CSR matrix. Column indices are strictly increasing within a row."""

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dtype = scalar_field(self.values)
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets, INDEX))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices, INDEX))
        object.__setattr__(self, "values", _frozen(self.values, dtype))
        ptr, idx = self.row_offsets, self.col_indices
        if len(ptr) != self.n_rows + 1 or ptr[0] != 0 or ptr[-1] != len(idx):
            raise StructuralError("row_offsets must have length n_rows+1 and end at nnz")
        if len(self.values) != len(idx):
            raise StructuralError("values and col_indices differ in length")
        if np.any(np.diff(ptr) < 0):
            raise StructuralError("row_offsets must be non-decreasing")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.n_cols):
            raise StructuralError("column index out of range")
        inc = np.diff(idx) > 0
        row_start = np.zeros(len(idx), dtype=bool)
        row_start[ptr[1:-1][ptr[1:-1] < len(idx)]] = True
        if not np.all(inc | row_start[1:]):
            raise StructuralError("column indices must be strictly increasing within rows")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.values)

    @property
    def dtype(self):
        return self.values.dtype

    def astype(self, dtype):
        return SparseMatrix(self.n_rows, self.n_cols, self.row_offsets,
                            self.col_indices, self.values.astype(dtype))

    def to_scipy(self):
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                             shape=self.shape)

    def to_dense(self):
        return self.to_scipy().toarray()

    def diagonal(self):
        return self.to_scipy().diagonal()

    def transpose(self):
        return from_scipy(self.to_scipy().T)

    def __matmul__(self, x):
        return spmv(self, x)

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz}, dtype={self.dtype})"


def from_scipy(M):
    M = sp.csr_matrix(M)
    M.sum_duplicates()
    M.sort_indices()
    return SparseMatrix(M.shape[0], M.shape[1], M.indptr, M.indices, M.data)


def csr_from_arrays(rows, cols, vals, n_rows, n_cols):
    """Assemble a CSR matrix from coordinate arrays, summing duplicates."""
    rows = np.ascontiguousarray(rows, dtype=INDEX)
    cols = np.ascontiguousarray(cols, dtype=INDEX)
    vals = np.ascontiguousarray(vals, dtype=scalar_field(vals))
    if not (len(rows) == len(cols) == len(vals)):
        raise DimensionError("triplet arrays differ in length")
    if len(rows) and (rows.min() < 0 or rows.max() >= n_rows
                      or cols.min() < 0 or cols.max() >= n_cols):
        raise StructuralError("triplet index out of range")
    ptr, idx, data = kernels.coo_to_csr(rows, cols, vals, n_rows, n_cols)
    return SparseMatrix(n_rows, n_cols, ptr, idx, data)


def csr_from_triplets(triplets, n_rows, n_cols):
    """Build a CSR matrix from ``(row, col, value)`` tuples.

    Repeated ``(row, col)`` pairs are summed, as in finite element assembly.

    >>> A = csr_from_triplets([(0, 1, 2.0), (1, 0, 3.0), (0, 0, 1.0)], 2, 2)
    >>> A.row_offsets.tolist(), A.col_indices.tolist(), A.values.tolist()
    ([0, 2, 3], [0, 1, 0], [1.0, 2.0, 3.0])
    """
    triplets = list(triplets)
    if not triplets:
        return csr_from_arrays(np.empty(0), np.empty(0), np.empty(0), n_rows, n_cols)
    rows, cols, vals = zip(*triplets)
    return csr_from_arrays(rows, cols, np.asarray(vals), n_rows, n_cols)


def spmv(A, x):
    """y = A x, each row summed left to right in ascending column order."""
    x = np.asarray(x)
    if x.ndim != 1 or len(x) != A.n_cols:
        raise DimensionError(f"cannot multiply {A.shape} matrix by vector of shape {x.shape}")
    dtype = scalar_field(A.values, x)
    data = A.values if A.values.dtype == dtype else A.values.astype(dtype)
    x = np.ascontiguousarray(x, dtype=dtype)
    y = np.empty(A.n_rows, dtype=dtype)
    kernels.csr_matvec(A.row_offsets, A.col_indices, data, x, y)
    return y


def _check_index_set(s, n, what):
    s = np.asarray(s, dtype=INDEX)
    if s.ndim != 1:
        raise StructuralError(f"{what} index set must be one-dimensional")
    if len(s) and (s[0] < 0 or s[-1] >= n):
        raise StructuralError(f"{what} index out of range")
    if np.any(np.diff(s) <= 0):
        raise StructuralError(f"{what} index set must be strictly increasing")
    return s


def extract_submatrix(A, rows, cols):
    """``A[rows][:, cols]`` for sorted index sets, i.e. R_rows A R_cols^T."""
    rows = _check_index_set(rows, A.n_rows, "row")
    cols = _check_index_set(cols, A.n_cols, "column")
    new_col = np.full(A.n_cols, -1, dtype=INDEX)
    new_col[cols] = np.arange(len(cols), dtype=INDEX)
    ptr = A.row_offsets
    lengths = ptr[rows + 1] - ptr[rows]
    pos = np.repeat(ptr[rows] - np.cumsum(lengths) + lengths, lengths) + np.arange(lengths.sum())
    local_row = np.repeat(np.arange(len(rows), dtype=INDEX), lengths)
    mapped = new_col[A.col_indices[pos]]
    keep = mapped >= 0
    counts = np.bincount(local_row[keep], minlength=len(rows))
    out_ptr = np.concatenate(([0], np.cumsum(counts))).astype(INDEX)
    # source rows are sorted and the column map is monotone, so order is preserved
    return SparseMatrix(len(rows), len(cols), out_ptr, mapped[keep], A.values[pos[keep]])


class Factorization:
    """Sparse LU factors (SuperLU, COLAMD column ordering, partial pivoting).

    Solves are reentrant: the factor object is only read after construction.
    """

    def __init__(self, A):
        if A.n_rows != A.n_cols:
            raise DimensionError(f"cannot factorize non-square {A.shape} matrix")
        self.n = A.n_rows
        self.dtype = A.dtype
        if self.n == 0:
            self._lu = None
            self.nnz = 0
            return
        try:
            self._lu = spla.splu(A.to_scipy().tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularMatrixError(f"sparse LU failed: {exc}") from exc
        self.nnz = int(self._lu.L.nnz + self._lu.U.nnz)

    def solve(self, b):
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs of length {b.shape[0]} for a {self.n}x{self.n} factorization")
        if self.n == 0:
            return np.zeros_like(b, dtype=scalar_field(b, np.empty(0, self.dtype)))
        if np.iscomplexobj(b) and self.dtype.kind != "c":
            return self._lu.solve(np.ascontiguousarray(b.real)) + 1j * self._lu.solve(
                np.ascontiguousarray(b.imag))
        return self._lu.solve(np.ascontiguousarray(b, dtype=self.dtype))


def factorize(A):
    return Factorization(A)


def solve_factored(F, b):
    return F.solve(b)


def write_matrix_market(path, A, comment=""):
    """Write ``A`` in MatrixMarket coordinate format (1-based, ASCII)."""
    scipy.io.mmwrite(str(path), A.to_scipy().tocoo(), comment=comment)


def read_matrix_market(path):
    return from_scipy(scipy.io.mmread(str(path)))
