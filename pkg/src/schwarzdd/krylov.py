"""Right-preconditioned GMRES and preconditioned CG with Lanczos tracking.

Both solvers start from x0 = 0 and stop on the relative residual
||b - A x|| / ||b|| of the original (unpreconditioned) system.
"""
import csv
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .exceptions import ConfigurationError, DimensionError, NotPositiveDefiniteError
from .linalg import SparseMatrix, scalar_field, spmv

DEFAULT_TOL = 1e-8
DEFAULT_MAXIT = 1000
REORTH_DROP = 1e-3


@dataclass
class SolveStats:
    """Convergence record of one Krylov solve.

    ``residual_history[0]`` is the initial relative residual (1 for x0 = 0);
    entry ``k`` is the residual after iteration ``k``.
    """

    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    lanczos_diag: list = field(default_factory=list)
    lanczos_offdiag: list = field(default_factory=list)

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else np.nan

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "relative_residual"])
            for k, r in enumerate(self.residual_history):
                w.writerow([k, repr(float(r))])


def _matvec(A):
    if isinstance(A, SparseMatrix):
        return lambda x: spmv(A, x)
    if isinstance(A, np.ndarray):
        return lambda x: A @ x
    if hasattr(A, "matvec"):
        return lambda x: np.ravel(A.matvec(x))
    if callable(A):
        return A
    raise TypeError(f"cannot use {type(A).__name__} as a linear operator")


def _precond(M):
    if M is None:
        return None
    if hasattr(M, "apply"):
        return M.apply
    return _matvec(M)


def _givens(a, b):
    """Rotation (c, s) with [c, s; -conj(s), c] @ [a, b] = [r, 0]; c real."""
    if b == 0:
        return 1.0, 0.0 * a
    if a == 0:
        return 0.0, np.conj(b) / abs(b) + 0.0 * a
    d = np.hypot(abs(a), abs(b))
    return abs(a) / d, (a / abs(a)) * np.conj(b) / d


def gmres(A, b, M=None, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, restart=None, callback=None):
    """Solve ``A x = b`` with right-preconditioned GMRES.

    Parameters
    ----------
    A : SparseMatrix, ndarray, LinearOperator or callable
    b : ndarray
    M : preconditioner, optional
        Anything with ``apply`` (e.g. a SchwarzPreconditioner), a matrix,
        a LinearOperator or a callable ``r -> M^-1 r``.
    tol : float
        Relative residual target.
    maxit : int
        Total number of iterations (matrix-vector products) allowed.
    restart : int, optional
        Krylov dimension per cycle; ``None`` means full GMRES.

    Returns
    -------
    x : ndarray
    stats : SolveStats

    Notes
    -----
    Arnoldi uses modified Gram-Schmidt; a second pass is done when the
    vector norm drops by more than a factor 1e3. When the Givens estimate
    reaches ``tol`` the true residual is recomputed and the solve restarts
    from the current iterate if it has not.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    t0 = time.perf_counter()
    b = np.asarray(b)
    n = len(b)
    matvec = _matvec(A)
    prec = _precond(M)
    dtype = scalar_field(b)
    stats = SolveStats()
    x = np.zeros(n, dtype=dtype)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        stats.residual_history = [0.0]
        stats.converged = True
        stats.wall_time = time.perf_counter() - t0
        return x, stats

    r = b.astype(dtype)
    beta = bnorm
    stats.residual_history.append(1.0)
    while stats.iterations < maxit:
        m = maxit - stats.iterations if restart is None else min(restart, maxit - stats.iterations)
        V = [r / beta]
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = beta
        j_last = -1
        done = False
        for j in range(m):
            z = V[j] if prec is None else prec(V[j])
            w = matvec(z)
            if w.dtype != dtype:
                dtype = scalar_field(w, b)
                w = w.astype(dtype)
            norm0 = np.linalg.norm(w)
            for i in range(j + 1):
                h = np.vdot(V[i], w)
                H[i, j] += h
                w = w - h * V[i]
            if np.linalg.norm(w) < REORTH_DROP * norm0:
                for i in range(j + 1):
                    h = np.vdot(V[i], w)
                    H[i, j] += h
                    w = w - h * V[i]
            hnext = np.linalg.norm(w)
            H[j + 1, j] = hnext
            for i in range(j):
                hi, hi1 = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hi1
                H[i + 1, j] = -np.conj(sn[i]) * hi + cs[i] * hi1
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            stats.iterations += 1
            res = abs(g[j + 1]) / bnorm
            stats.residual_history.append(float(res))
            j_last = j
            if callback is not None:
                callback(res)
            if hnext <= 1e-14 * max(norm0, 1.0) or res <= tol:
                done = True
                break
            V.append(w / hnext)
        k = j_last + 1
        y = np.zeros(k, dtype=complex)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:k] @ y[i + 1:k]) / H[i, i]
        if dtype.kind != "c":
            y = y.real
        update = V[0] * y[0]
        for i in range(1, k):
            update = update + V[i] * y[i]
        x = x + (update if prec is None else prec(update))
        r = b - matvec(x)
        beta = np.linalg.norm(r)
        true_res = beta / bnorm
        if true_res <= tol:
            stats.converged = True
            break
        if done:
            # the recurrence estimate drifted from the true residual: restart from x
            stats.residual_history[-1] = float(true_res)
    stats.wall_time = time.perf_counter() - t0
    return x, stats


def pcg(A, b, M=None, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT):
    """Preconditioned conjugate gradients for Hermitian positive definite systems.

    The CG coefficients are turned into the Lanczos tridiagonal matrix
    (``stats.lanczos_diag`` / ``stats.lanczos_offdiag``) whose eigenvalues
    approximate the spectrum of ``M^-1 A``; see :func:`estimate_condition`.

    Raises
    ------
    NotPositiveDefiniteError
        If ``p^H A p <= 0`` or ``r^H M^-1 r <= 0`` (e.g. a restricted
        Schwarz preconditioner, which is not symmetric).
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    t0 = time.perf_counter()
    b = np.asarray(b)
    matvec = _matvec(A)
    prec = _precond(M) or (lambda v: v.copy())
    stats = SolveStats()
    x = np.zeros(len(b), dtype=scalar_field(b))
    bnorm = np.linalg.norm(b)
    stats.residual_history.append(0.0 if bnorm == 0 else 1.0)
    if bnorm == 0:
        stats.converged = True
        return x, stats

    r = b.astype(x.dtype)
    z = prec(r)
    rz = np.vdot(r, z)
    if rz.real <= 0:
        raise NotPositiveDefiniteError("preconditioner is not positive definite (r^H M r <= 0)")
    p = z.copy()
    alpha_prev = beta_prev = None
    while stats.iterations < maxit:
        q = matvec(p)
        curv = np.vdot(p, q).real
        if curv <= 0:
            raise NotPositiveDefiniteError(f"non-positive curvature p^H A p = {curv:.3e}")
        alpha = rz.real / curv
        x = x + alpha * p
        r = r - alpha * q
        stats.iterations += 1
        diag = 1.0 / alpha
        if alpha_prev is not None:
            diag += beta_prev / alpha_prev
        stats.lanczos_diag.append(diag)
        res = np.linalg.norm(r) / bnorm
        stats.residual_history.append(float(res))
        if res <= tol:
            stats.converged = True
            break
        z = prec(r)
        rz_new = np.vdot(r, z)
        if rz_new.real <= 0:
            raise NotPositiveDefiniteError("preconditioner is not positive definite (r^H M r <= 0)")
        beta = rz_new.real / rz.real
        stats.lanczos_offdiag.append(np.sqrt(beta) / alpha)
        p = z + beta * p
        rz = rz_new
        alpha_prev, beta_prev = alpha, beta
    stats.wall_time = time.perf_counter() - t0
    return x, stats


def lanczos_eigenvalues(stats):
    d = np.asarray(stats.lanczos_diag, dtype=float)
    if len(d) == 0:
        raise ConfigurationError("no Lanczos coefficients recorded (run pcg first)")
    e = np.asarray(stats.lanczos_offdiag[:len(d) - 1], dtype=float)
    return eigvalsh_tridiagonal(d, e)


def estimate_condition(stats):
    """Ratio of the extreme Ritz values of the CG Lanczos matrix."""
    ev = lanczos_eigenvalues(stats)
    return float(ev[-1] / ev[0])
