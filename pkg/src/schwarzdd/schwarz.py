"""One- and two-level overlapping Schwarz preconditioners.

=======  ===============================  =====================
variant  preconditioner                   local matrix
=======  ===============================  =====================
AS       sum_i R_i^T A_i^-1 R_i           A_i (interior dofs)
RAS      sum_i R_i^T D_i A_i^-1 R_i       A_i, binary D_i
SAS      sum_i R_i^T D_i A_i^-1 R_i       A_i, 1/multiplicity
OAS      sum_i R_i^T B_i^-1 R_i           B_i (all of V_i)
ORAS     sum_i R_i^T D_i B_i^-1 R_i       B_i, binary D_i
=======  ===============================  =====================

``A_i`` is the principal submatrix of the global matrix on the dofs of
V_i off the subdomain interface (homogeneous Dirichlet closure). ``B_i``
is assembled on the local mesh with a Robin closure on the interface, and
the residual is zeroed on interface dofs before each ``B_i`` solve.
Global Dirichlet dofs (identity rows of A) are passed through unchanged.
"""
import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .exceptions import ConfigurationError, DimensionError, SingularMatrixError
from .linalg import INDEX, SparseMatrix, extract_submatrix, factorize, from_scipy, scalar_field, spmv
from .partition import MULTIPLICITY, RESTRICTED

VARIANTS = ("AS", "RAS", "SAS", "OAS", "ORAS")
OPTIMIZED = ("OAS", "ORAS")


def _dirichlet_mask(n, dirichlet_dofs):
    mask = np.zeros(n, dtype=bool)
    if dirichlet_dofs is not None:
        mask[np.asarray(dirichlet_dofs, dtype=INDEX)] = True
    return mask


def local_interior_dofs(decomp, dirichlet_dofs=None):
    """Per subdomain: V_i without interface and without global Dirichlet dofs."""
    is_dir = _dirichlet_mask(decomp.n_dofs, dirichlet_dofs)
    return [d[~is_dir[d]] for d in decomp.interior]


def local_dirichlet_matrices(A, decomp, dirichlet_dofs=None):
    """A_i = R_i A R_i^T on the interior dofs of each overlapping subdomain."""
    if A.n_rows != decomp.n_dofs:
        raise DimensionError("matrix and decomposition sizes differ")
    out = []
    for i, dofs in enumerate(local_interior_dofs(decomp, dirichlet_dofs)):
        if len(dofs) == 0:
            raise ConfigurationError(
                f"subdomain {i} has no interior dofs; use larger subdomains or fewer overlap layers")
        out.append(extract_submatrix(A, dofs, dofs))
    return out


@dataclass(eq=False)
class LocalSolver:
    """One subdomain term: global dofs, scaling weights and factorized matrix."""

    subdomain: int
    dofs: np.ndarray
    weights: np.ndarray
    zero_positions: np.ndarray
    matrix: SparseMatrix
    factor: object

    def solve(self, r):
        rl = r[self.dofs]
        if len(self.zero_positions):
            rl[self.zero_positions] = 0
        return self.factor.solve(rl)


@dataclass(eq=False)
class CoarseLevel:
    """Piecewise-constant coarse space on the unique-owner partition."""

    basis: sp.csr_matrix
    matrix: np.ndarray
    factor: object

    @property
    def size(self):
        return self.basis.shape[1]

    def apply(self, r):
        return self.basis @ self.factor.solve(self.basis.T @ r)


class SchwarzPreconditioner:
    """Applies z = M^-1 r for one of the variants in ``VARIANTS``.

    Use :func:`build_one_level` / :func:`build_two_level` to construct one.
    The object is callable and also usable as a scipy ``LinearOperator``
    through :meth:`as_linear_operator`.
    """

    def __init__(self, variant, n, locals_, dirichlet_dofs, dtype, coarse=None,
                 decomp=None, threads=1):
        self.variant = variant
        self.n = n
        self.locals = locals_
        self.dirichlet_dofs = np.asarray(dirichlet_dofs, dtype=INDEX)
        self.dtype = np.dtype(dtype)
        self.coarse = coarse
        self.decomp = decomp
        self.threads = max(1, int(threads))

    @property
    def levels(self):
        return 1 if self.coarse is None else 2

    @property
    def n_subdomains(self):
        return len(self.locals)

    def apply(self, r):
        r = np.asarray(r)
        if r.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {r.shape}")
        dtype = scalar_field(r, np.empty(0, self.dtype))
        rr = r.astype(dtype, copy=True)
        rr[self.dirichlet_dofs] = 0
        if self.threads > 1 and len(self.locals) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                ys = list(pool.map(lambda loc: loc.solve(rr), self.locals))
        else:
            ys = (loc.solve(rr) for loc in self.locals)
        z = np.zeros(self.n, dtype=dtype)
        # accumulate in subdomain order so results do not depend on threading
        for loc, y in zip(self.locals, ys):
            z[loc.dofs] += loc.weights * y
        z[self.dirichlet_dofs] = r[self.dirichlet_dofs]
        if self.coarse is not None:
            z += self.coarse.apply(r.astype(dtype))
        return z

    __call__ = apply

    def as_linear_operator(self):
        return LinearOperator((self.n, self.n), matvec=self.apply, dtype=self.dtype)

    def report_rows(self):
        rows = []
        for loc in self.locals:
            iface = 0 if self.decomp is None else len(self.decomp.interface[loc.subdomain])
            rows.append({"subdomain": loc.subdomain, "local_dofs": len(loc.dofs),
                         "interface_dofs": iface, "matrix_nnz": loc.matrix.nnz,
                         "factor_nnz": loc.factor.nnz})
        if self.coarse is not None:
            rows.append({"subdomain": "coarse", "local_dofs": self.coarse.size, "interface_dofs": 0,
                         "matrix_nnz": int(np.count_nonzero(self.coarse.matrix)),
                         "factor_nnz": self.coarse.factor.nnz})
        return rows

    def write_report(self, path):
        """Setup report: local sizes, interface sizes and factor fill per subdomain."""
        rows = self.report_rows()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)

    def __repr__(self):
        return (f"SchwarzPreconditioner({self.variant}, levels={self.levels}, "
                f"subdomains={self.n_subdomains}, n={self.n})")


def _factorize(i, M):
    try:
        return factorize(M)
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"local matrix of subdomain {i} is singular: {exc}", subdomain=i) from exc


def _restricted_owner(decomp, interior):
    """Unique owners, moved to an interior-holding subdomain where needed."""
    n = decomp.n_dofs
    first = np.full(n, len(interior), dtype=INDEX)
    holds_own = np.zeros(n, dtype=bool)
    for i, dofs in enumerate(interior):
        np.minimum.at(first, dofs, i)
        holds_own[dofs[decomp.owner[dofs] == i]] = True
    return np.where(holds_own, decomp.owner, first)


def build_one_level(A, decomp, variant, local_builder=None, dirichlet_dofs=None,
                    oras_scaling=RESTRICTED, threads=1):
    """Set up and factorize a one-level Schwarz preconditioner.

    Parameters
    ----------
    A : SparseMatrix
        Global system matrix.
    decomp : OverlappingDecomposition
    variant : {"AS", "RAS", "SAS", "OAS", "ORAS"}
    local_builder : callable, optional
        ``local_mesh -> B_i``; required for OAS and ORAS, see
        :func:`schwarzdd.assembly.robin_local_builder`.
    dirichlet_dofs : array_like, optional
        Identity rows of ``A``; they are passed through by the preconditioner.
    oras_scaling : {"restricted", "multiplicity"}
        Partition of unity used by ORAS.
    """
    variant = variant.upper()
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown Schwarz variant {variant!r}")
    n = decomp.n_dofs
    if A.shape != (n, n):
        raise DimensionError(f"matrix of shape {A.shape} for a decomposition of {n} dofs")
    dirichlet = np.asarray([] if dirichlet_dofs is None else dirichlet_dofs, dtype=INDEX)
    is_dir = _dirichlet_mask(n, dirichlet)
    locals_ = []

    if variant in OPTIMIZED:
        if local_builder is None:
            raise ConfigurationError(f"{variant} needs a local_builder assembling B_i")
        if decomp.mode != "element":
            raise ConfigurationError(f"{variant} needs an element-based decomposition (local meshes)")
        mode = RESTRICTED if variant == "ORAS" else None
        if variant == "ORAS" and oras_scaling == MULTIPLICITY:
            mode = MULTIPLICITY
        covered = np.zeros(n, dtype=bool)
        for dofs in decomp.interior:
            covered[dofs] = True
        missing = np.flatnonzero(~covered & ~is_dir)
        if len(missing):
            # every local residual vanishes there, so M^-1 is singular
            warnings.warn(f"{len(missing)} dofs lie on the interface of every subdomain holding them; "
                          f"{variant} will be singular (add overlap layers)",
                          RuntimeWarning, stacklevel=2)
        for i, dofs in enumerate(decomp.dofs):
            B = local_builder(decomp.local_mesh(i))
            if B.shape != (len(dofs), len(dofs)):
                raise DimensionError(f"B_{i} has shape {B.shape}, expected {len(dofs)} local dofs")
            if mode == RESTRICTED:
                w = (decomp.owner[dofs] == i).astype(float)
            elif mode == MULTIPLICITY:
                w = 1.0 / decomp.multiplicity[dofs]
            else:
                w = np.ones(len(dofs))
            zero = np.flatnonzero(np.isin(dofs, decomp.interface[i]) | is_dir[dofs])
            locals_.append(LocalSolver(i, dofs, w, zero, B, _factorize(i, B)))
        dtype = scalar_field(A.values, *(loc.matrix.values for loc in locals_))
    else:
        interior = local_interior_dofs(decomp, dirichlet)
        covered = np.zeros(n, dtype=bool)
        for dofs in interior:
            covered[dofs] = True
        missing = np.flatnonzero(~covered & ~is_dir)
        if len(missing):
            raise ConfigurationError(
                f"{len(missing)} dofs (first: {missing[:5].tolist()}) are interior to no overlapping "
                f"subdomain; {variant} needs more overlap layers or node-based overlap")
        owner = _restricted_owner(decomp, interior) if variant == "RAS" else None
        for i, (dofs, Ai) in enumerate(zip(interior, local_dirichlet_matrices(A, decomp, dirichlet))):
            if variant == "RAS":
                w = (owner[dofs] == i).astype(float)
            elif variant == "SAS":
                w = 1.0 / decomp.multiplicity[dofs]
            else:
                w = np.ones(len(dofs))
            locals_.append(LocalSolver(i, dofs, w, np.empty(0, INDEX), Ai, _factorize(i, Ai)))
        dtype = A.dtype
    return SchwarzPreconditioner(variant, n, locals_, dirichlet, dtype, decomp=decomp, threads=threads)


def coarse_basis(decomp):
    """Binary n x N0 matrix; column j is the indicator of the dofs owned by
    the j-th subdomain that owns any (N0 <= N)."""
    n = decomp.n_dofs
    used, col = np.unique(decomp.owner, return_inverse=True)
    return sp.csr_matrix((np.ones(n), (np.arange(n), col.ravel())), shape=(n, len(used)))


def build_two_level(M1, A):
    """Add the coarse correction Phi A_0^-1 Phi^T to a one-level preconditioner."""
    if M1.decomp is None:
        raise ConfigurationError("two-level setup needs the decomposition of the one-level preconditioner")
    Phi = coarse_basis(M1.decomp)
    A0 = (Phi.T @ A.to_scipy() @ Phi).toarray()
    F = _factorize("coarse", from_scipy(A0))
    coarse = CoarseLevel(Phi, A0, F)
    return SchwarzPreconditioner(M1.variant, M1.n, M1.locals, M1.dirichlet_dofs,
                                 scalar_field(np.empty(0, M1.dtype), A0), coarse=coarse,
                                 decomp=M1.decomp, threads=M1.threads)


def schwarz_operator(M, A):
    """Q = M^-1 A as a LinearOperator."""
    n = A.n_rows
    return LinearOperator((n, n), matvec=lambda x: M.apply(spmv(A, np.ravel(x))),
                          dtype=scalar_field(A.values, np.empty(0, M.dtype)))


def combine(ops, mode="additive"):
    """Combine Schwarz operators.

    ``additive`` gives sum_i Q_i; ``multiplicative`` gives
    I - (I - Q_1)(I - Q_2)...(I - Q_M), applied right to left.
    """
    ops = list(ops)
    if not ops:
        raise ConfigurationError("nothing to combine")
    n = ops[0].shape[0]
    dtype = np.result_type(*(op.dtype for op in ops))

    if mode == "additive":
        def matvec(x):
            x = np.ravel(x)
            y = ops[0].matvec(x)
            for op in ops[1:]:
                y = y + op.matvec(x)
            return y
    elif mode == "multiplicative":
        def matvec(x):
            x = np.ravel(x)
            e = x
            for op in reversed(ops):
                e = e - op.matvec(e)
            return x - e
    else:
        raise ConfigurationError(f"unknown combination mode {mode!r}")
    return LinearOperator((n, n), matvec=matvec, dtype=dtype)
