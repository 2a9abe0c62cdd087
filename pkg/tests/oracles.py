"""Independent dense reference implementations used by the tests.

Nothing here calls the package's assembly, overlap or preconditioner code;
inputs are plain arrays (mesh coordinates, dof sets) and outputs are dense
matrices built with explicit loops.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss


def q1_dense(vertices, cells, coef=None, omega=0.0, quad=3):
    """Dense K - omega^2 M_c for bilinear quads, quad x quad Gauss points."""
    n = len(vertices)
    A = np.zeros((n, n), dtype=complex if omega else float)
    pts, wts = leggauss(quad)
    ref = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    for c, cell in enumerate(cells):
        p = vertices[cell]
        hx = p[1, 0] - p[0, 0]
        hy = p[3, 1] - p[0, 1]
        cc = 1.0 if coef is None else coef[c]
        for xi, wx in zip(pts, wts):
            for eta, wy in zip(pts, wts):
                N = (1 + xi * ref[:, 0]) * (1 + eta * ref[:, 1]) / 4
                dN = np.stack([ref[:, 0] * (1 + eta * ref[:, 1]) / 4 * 2 / hx,
                               ref[:, 1] * (1 + xi * ref[:, 0]) / 4 * 2 / hy], axis=1)
                w = wx * wy * hx * hy / 4
                for a in range(4):
                    for b in range(4):
                        A[cell[a], cell[b]] += w * (dN[a] @ dN[b] - omega ** 2 * cc * N[a] * N[b])
    return A


def edge_mass_dense(vertices, edges, n, weights=None):
    """Dense boundary mass matrix sum_e w_e int_e phi_a phi_b (exact for linears)."""
    S = np.zeros((n, n), dtype=complex if weights is not None and np.iscomplexobj(weights) else float)
    for k, (a, b) in enumerate(edges):
        L = np.linalg.norm(vertices[b] - vertices[a])
        w = 1.0 if weights is None else weights[k]
        S[a, a] += w * L / 3
        S[b, b] += w * L / 3
        S[a, b] += w * L / 6
        S[b, a] += w * L / 6
    return S


def eliminate_dirichlet(A, dirichlet):
    """Identity rows and columns on ``dirichlet``."""
    A = A.copy()
    A[dirichlet, :] = 0
    A[:, dirichlet] = 0
    A[dirichlet, dirichlet] = 1
    return A


def adjacency_dense(n, pairs):
    G = np.zeros((n, n), dtype=bool)
    for i, j in pairs:
        if i != j:
            G[i, j] = G[j, i] = True
    return G


def within_distance(G, seeds, k):
    """Nodes at graph distance <= k from ``seeds`` via boolean matrix powers."""
    reach = np.zeros(len(G), dtype=bool)
    reach[list(seeds)] = True
    for _ in range(k):
        reach = reach | (G[reach].any(axis=0))
    return np.flatnonzero(reach)


def cells_sharing_edge(cells):
    pairs = []
    for i in range(len(cells)):
        ei = {frozenset((cells[i][a], cells[i][(a + 1) % 4])) for a in range(4)}
        for j in range(i + 1, len(cells)):
            ej = {frozenset((cells[j][a], cells[j][(a + 1) % 4])) for a in range(4)}
            if ei & ej:
                pairs.append((i, j))
    return pairs


def restriction_dense(dofs, n):
    R = np.zeros((len(dofs), n))
    R[np.arange(len(dofs)), dofs] = 1.0
    return R


def dense_schwarz(A, local_sets, local_mats, weights, zeroed, dirichlet, n):
    """M = sum_i R_i^T W_i inv(L_i) Z_i R_i with Dirichlet rows passed through.

    ``local_sets[i]`` are global dofs, ``local_mats[i]`` dense local matrices,
    ``weights[i]`` per-dof weights and ``zeroed[i]`` global dofs whose
    residual entries are cleared before the local solve.
    """
    M = np.zeros((n, n), dtype=complex if np.iscomplexobj(A) else float)
    pass_through = np.zeros(n, dtype=bool)
    pass_through[dirichlet] = True
    for dofs, L, w, zero in zip(local_sets, local_mats, weights, zeroed):
        R = restriction_dense(dofs, n)
        Z = np.diag([0.0 if d in set(zero) or pass_through[d] else 1.0 for d in dofs])
        M = M + R.T @ np.diag(w) @ np.linalg.inv(L) @ Z @ R
    M[pass_through, :] = 0
    M[:, pass_through] = 0
    M[pass_through, pass_through] = 1
    return M


def coarse_dense(A, owner, n_parts):
    Phi = np.zeros((len(owner), n_parts))
    Phi[np.arange(len(owner)), owner] = 1
    Phi = Phi[:, Phi.any(axis=0)]
    A0 = Phi.T @ A @ Phi
    return Phi @ np.linalg.inv(A0) @ Phi.T, A0


def operator_matrix(apply, n, dtype=float):
    """Dense matrix of a linear map by applying it to unit vectors."""
    M = np.zeros((n, n), dtype=dtype)
    for j in range(n):
        e = np.zeros(n, dtype=dtype)
        e[j] = 1
        M[:, j] = apply(e)
    return M


def oracle_preconditioner(A, dofs, interface, owner, multiplicity, variant, dirichlet,
                          local_B=None, two_level=False):
    """Dense M^-1 for a Schwarz variant from the decomposition's dof sets.

    ``A`` is dense; ``local_B`` (OAS/ORAS) are the dense Robin-closed local
    matrices on ``dofs[i]``. Restricted weights on the Dirichlet-closed path
    go to the owner when the owner holds the dof off its interface and to
    the lowest such subdomain otherwise.
    """
    n = len(A)
    dirichlet = set(np.asarray(dirichlet).tolist())
    sets, mats, weights, zeroed = [], [], [], []
    if variant in ("OAS", "ORAS"):
        for i, v in enumerate(dofs):
            sets.append(list(v))
            mats.append(local_B[i])
            if variant == "ORAS":
                weights.append([1.0 if owner[d] == i else 0.0 for d in v])
            else:
                weights.append([1.0] * len(v))
            zeroed.append(list(interface[i]))
    else:
        inner = [[d for d in v if d not in set(interface[i]) and d not in dirichlet]
                 for i, v in enumerate(dofs)]
        holders = {}
        for i, v in enumerate(inner):
            for d in v:
                holders.setdefault(d, []).append(i)
        for i, v in enumerate(inner):
            sets.append(v)
            mats.append(A[np.ix_(v, v)])
            if variant == "RAS":
                w = []
                for d in v:
                    target = owner[d] if owner[d] in holders[d] else min(holders[d])
                    w.append(1.0 if target == i else 0.0)
            elif variant == "SAS":
                w = [1.0 / multiplicity[d] for d in v]
            else:
                w = [1.0] * len(v)
            weights.append(w)
            zeroed.append([])
    M = dense_schwarz(A, sets, mats, weights, zeroed, sorted(dirichlet), n)
    if two_level:
        C, _ = coarse_dense(A, owner, len(dofs))
        M = M + C
    return M
