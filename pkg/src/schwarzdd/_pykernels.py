"""Numpy implementations of the compiled kernels in ``_ckernels``.

Loops run over "slot" positions instead of rows so that each row (or each
group of duplicate triplets) is still accumulated left to right, which keeps
results bitwise equal to the compiled path.
"""
from collections import deque

import numpy as np


def csr_matvec(indptr, indices, data, x, y):
    n = len(indptr) - 1
    lengths = np.diff(indptr)
    y[:] = 0
    if n == 0 or len(data) == 0:
        return
    starts = indptr[:-1]
    for slot in range(int(lengths.max())):
        rows = np.flatnonzero(lengths > slot)
        p = starts[rows] + slot
        y[rows] = y[rows] + data[p] * x[indices[p]]


def coo_to_csr(rows, cols, vals, n_rows, n_cols):
    order = np.lexsort((cols, rows))
    r = rows[order]
    c = cols[order]
    v = vals[order]
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    if len(order) == 0:
        return indptr, np.empty(0, dtype=np.int64), np.empty(0, dtype=vals.dtype)
    new = np.ones(len(order), dtype=bool)
    new[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.flatnonzero(new)
    sizes = np.diff(np.append(starts, len(order)))
    data = v[starts].copy()
    for slot in range(1, int(sizes.max())):
        groups = np.flatnonzero(sizes > slot)
        data[groups] = data[groups] + v[starts[groups] + slot]
    np.add.at(indptr, r[starts] + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, c[starts].astype(np.int64), data


def bfs_distance(indptr, indices, seeds, max_depth):
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    frontier = np.flatnonzero(seeds)
    dist[frontier] = 0
    depth = 0
    while len(frontier) and depth < max_depth:
        lengths = indptr[frontier + 1] - indptr[frontier]
        if lengths.sum() == 0:
            break
        offsets = np.repeat(indptr[frontier] - np.cumsum(lengths) + lengths, lengths)
        nbrs = indices[offsets + np.arange(lengths.sum())]
        nbrs = np.unique(nbrs[dist[nbrs] < 0])
        depth += 1
        dist[nbrs] = depth
        frontier = nbrs
    return dist


def greedy_grow(indptr, indices, n_parts, seed_order):
    n = len(indptr) - 1
    owner = np.full(n, -1, dtype=np.int64)
    remaining = n
    cursor = 0
    for part in range(n_parts):
        target = -(-remaining // (n_parts - part))
        count = 0
        queue = deque()
        while count < target:
            if not queue:
                while owner[seed_order[cursor]] >= 0:
                    cursor += 1
                i = seed_order[cursor]
                owner[i] = part
                count += 1
                queue.append(i)
                continue
            i = queue.popleft()
            for j in indices[indptr[i]:indptr[i + 1]]:
                if count >= target:
                    break
                if owner[j] < 0:
                    owner[j] = part
                    count += 1
                    queue.append(j)
        remaining -= count
    return owner
