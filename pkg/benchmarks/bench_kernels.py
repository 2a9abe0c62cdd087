"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--n 256] [--repeat 5]

Both backends get identical inputs built from a Q1 Poisson matrix on an
n x n mesh; the script also checks that their outputs agree bitwise.
"""
import argparse
import timeit

import numpy as np

from schwarzdd._backend import get_kernels
from schwarzdd.mesh import dual_graph, node_graph
from schwarzdd.problems import poisson_problem


def _inputs(n):
    prob = poisson_problem(n)
    A = prob.A
    rows = np.repeat(np.arange(A.n_rows, dtype=np.int64), np.diff(A.row_offsets))
    perm = np.random.default_rng(0).permutation(len(rows))
    dual = dual_graph(prob.mesh)
    nodes = node_graph(A)
    seeds = np.zeros(nodes.n_nodes, dtype=np.uint8)
    seeds[:n] = 1
    x = np.random.default_rng(1).standard_normal(A.n_cols)

    def matvec(k):
        y = np.empty(A.n_rows)
        k.csr_matvec(A.row_offsets, A.col_indices, A.values, x, y)
        return y

    return {
        "csr_matvec": matvec,
        "coo_to_csr": lambda k: k.coo_to_csr(rows[perm], A.col_indices[perm], A.values[perm],
                                             A.n_rows, A.n_cols),
        "bfs_distance": lambda k: k.bfs_distance(nodes.indptr, nodes.indices, seeds, 4),
        "greedy_grow": lambda k: k.greedy_grow(dual.indptr, dual.indices, 16,
                                               np.arange(dual.n_nodes, dtype=np.int64)),
    }, A.n_rows


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=256, help="mesh cells per side")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    cy, py = get_kernels("cython"), get_kernels("python")
    cases, ndofs = _inputs(args.n)
    print(f"Q1 Poisson, {ndofs} dofs; best of {args.repeat}")
    print(f"{'kernel':<14}{'cython [ms]':>13}{'python [ms]':>13}{'speedup':>9}  equal")
    for name, call in cases.items():
        tc = min(timeit.repeat(lambda: call(cy), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: call(py), number=1, repeat=args.repeat))
        equal = _same(call(cy), call(py))
        print(f"{name:<14}{1e3 * tc:13.3f}{1e3 * tp:13.3f}{tp / tc:9.1f}  {equal}")


if __name__ == "__main__":
    main()
