# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: CSR matvec, triplet compression and graph sweeps.

Every routine here has a numpy twin in ``_pykernels`` with the same
signature and the same floating point operation order.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t idx_t

ctypedef fused scalar_t:
    double
    double complex


def csr_matvec(const idx_t[::1] indptr, const idx_t[::1] indices,
               const scalar_t[::1] data, const scalar_t[::1] x,
               scalar_t[::1] y):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef scalar_t acc
    for i in range(n):
        acc = 0
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + data[p] * x[indices[p]]
        y[i] = acc


def coo_to_csr(const idx_t[::1] rows, const idx_t[::1] cols,
               const scalar_t[::1] vals, Py_ssize_t n_rows, Py_ssize_t n_cols):
    """Stable (row, col) sort with in-order summation of duplicates."""
    cdef Py_ssize_t nnz = rows.shape[0]
    cdef Py_ssize_t k, p, q, r, c
    cdef idx_t[::1] col_count = np.zeros(n_cols + 1, dtype=np.int64)
    cdef idx_t[::1] row_count = np.zeros(n_rows + 1, dtype=np.int64)
    cdef idx_t[::1] by_col = np.empty(nnz, dtype=np.int64)
    cdef idx_t[::1] order = np.empty(nnz, dtype=np.int64)

    # pass 1: stable counting sort on column
    for k in range(nnz):
        col_count[cols[k] + 1] += 1
    for c in range(n_cols):
        col_count[c + 1] += col_count[c]
    for k in range(nnz):
        c = cols[k]
        by_col[col_count[c]] = k
        col_count[c] += 1
    # pass 2: stable counting sort on row
    for k in range(nnz):
        row_count[rows[k] + 1] += 1
    for r in range(n_rows):
        row_count[r + 1] += row_count[r]
    for p in range(nnz):
        k = by_col[p]
        r = rows[k]
        order[row_count[r]] = k
        row_count[r] += 1

    out_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    out_idx = np.empty(nnz, dtype=np.int64)
    out_val = np.empty(nnz, dtype=np.asarray(vals).dtype)
    cdef idx_t[::1] indptr = out_ptr
    cdef idx_t[::1] indices = out_idx
    cdef scalar_t[::1] data = out_val
    cdef scalar_t acc
    q = 0
    p = 0
    while p < nnz:
        k = order[p]
        r = rows[k]
        c = cols[k]
        acc = vals[k]
        p += 1
        while p < nnz and rows[order[p]] == r and cols[order[p]] == c:
            acc = acc + vals[order[p]]
            p += 1
        indices[q] = c
        data[q] = acc
        indptr[r + 1] += 1
        q += 1
    for r in range(n_rows):
        indptr[r + 1] += indptr[r]
    return out_ptr, out_idx[:q].copy(), out_val[:q].copy()


def bfs_distance(const idx_t[::1] indptr, const idx_t[::1] indices,
                 const cnp.uint8_t[::1] seeds, Py_ssize_t max_depth):
    """Graph distance from the seed set, capped: -1 beyond ``max_depth``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] dist = out
    cdef idx_t[::1] queue = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t head = 0, tail = 0, i, p, j
    for i in range(n):
        if seeds[i]:
            dist[i] = 0
            queue[tail] = i
            tail += 1
    while head < tail:
        i = queue[head]
        head += 1
        if dist[i] >= max_depth:
            continue
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if dist[j] < 0:
                dist[j] = dist[i] + 1
                queue[tail] = j
                tail += 1
    return out


def greedy_grow(const idx_t[::1] indptr, const idx_t[::1] indices,
                Py_ssize_t n_parts, const idx_t[::1] seed_order):
    """Greedy BFS region growing; parts are filled to ceil(remaining/left)."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] owner = out
    cdef idx_t[::1] queue = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t part, target, count, remaining = n
    cdef Py_ssize_t cursor = 0, head, tail, i, j, p
    for part in range(n_parts):
        target = (remaining + (n_parts - part) - 1) // (n_parts - part)
        count = 0
        head = 0
        tail = 0
        while count < target:
            if head == tail:
                while owner[seed_order[cursor]] >= 0:
                    cursor += 1
                i = seed_order[cursor]
                owner[i] = part
                count += 1
                queue[tail] = i
                tail += 1
                continue
            i = queue[head]
            head += 1
            for p in range(indptr[i], indptr[i + 1]):
                if count >= target:
                    break
                j = indices[p]
                if owner[j] < 0:
                    owner[j] = part
                    count += 1
                    queue[tail] = j
                    tail += 1
        remaining -= count
    return out
