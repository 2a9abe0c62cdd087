"""Q1 finite element assembly for Poisson and Helmholtz model problems.

Global systems:

    poisson    A = K                              (Dirichlet rows eliminated)
    helmholtz  A = K - omega^2 M_c + i omega S_abs

``M_c`` is the mass matrix weighted by the per-cell coefficient ``c`` and
``S_abs`` the boundary mass matrix of sides marked absorbing or incident,
each edge weighted by ``sqrt(c)`` of its cell (so the absorbing condition
uses the local wavenumber; with ``c = 1`` this is the plain i omega term).
Local subdomain matrices add ``alpha * S_int``, the boundary mass matrix
of the interface edges (the weak form of (d/dn + alpha) u = 0).

Cell integrals use 2x2 Gauss points and edge integrals 2 Gauss points,
which is exact for every bilinear term here.
"""
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .exceptions import ConfigurationError
from .linalg import INDEX, SparseMatrix, csr_from_arrays
from .mesh import INTERFACE

_G = 1.0 / np.sqrt(3.0)
_GAUSS_1D = np.array([-_G, _G])
_REF_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class Dirichlet:
    value: Union[float, Callable] = 0.0


@dataclass(frozen=True)
class Neumann:
    """Homogeneous natural condition."""


@dataclass(frozen=True)
class Absorbing:
    """First-order absorbing condition du/dn + i omega u = 0."""


@dataclass(frozen=True)
class Incident:
    """Absorbing side driven by an incoming trace: du/dn + i omega u = g."""

    g: Union[float, Callable] = 0.0


@dataclass(frozen=True)
class ProblemSpec:
    kind: str = "poisson"
    omega: float = None
    source: Union[float, Callable] = 0.0
    bc: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("poisson", "helmholtz"):
            raise ConfigurationError(f"unknown problem kind {self.kind!r}")
        if self.kind == "poisson":
            if self.omega is not None:
                raise ConfigurationError("poisson problems take no wavenumber")
            if any(isinstance(c, (Absorbing, Incident)) for c in self.bc.values()):
                raise ConfigurationError("absorbing/incident sides need a helmholtz problem")
        elif self.omega is None:
            raise ConfigurationError("helmholtz problems need a wavenumber omega")

    @property
    def dtype(self):
        return np.dtype(np.complex128 if self.kind == "helmholtz" else np.float64)

    @property
    def omega2(self):
        return 0.0 if self.omega is None else float(self.omega) ** 2

    def labels_with(self, *types):
        return [lab for lab, c in self.bc.items() if isinstance(c, types)]


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    A: SparseMatrix
    b: np.ndarray
    dirichlet_dofs: np.ndarray


def _shape(xi, eta):
    return (1 + xi * _REF_CORNERS[:, 0]) * (1 + eta * _REF_CORNERS[:, 1]) / 4.0


def _shape_grad(xi, eta):
    dxi = _REF_CORNERS[:, 0] * (1 + eta * _REF_CORNERS[:, 1]) / 4.0
    deta = _REF_CORNERS[:, 1] * (1 + xi * _REF_CORNERS[:, 0]) / 4.0
    return dxi, deta


def _reference_matrices():
    kx = np.zeros((4, 4))
    ky = np.zeros((4, 4))
    m = np.zeros((4, 4))
    for xi in _GAUSS_1D:
        for eta in _GAUSS_1D:
            n = _shape(xi, eta)
            dxi, deta = _shape_grad(xi, eta)
            kx += np.outer(dxi, dxi)
            ky += np.outer(deta, deta)
            m += np.outer(n, n)
    return kx, ky, m


_KX, _KY, _M = _reference_matrices()


def element_matrices(vertices, cells):
    """Stiffness and mass matrices of axis-aligned rectangles, shape (m, 4, 4)."""
    p = vertices[cells]
    hx = (p[:, 1, 0] - p[:, 0, 0])[:, None, None]
    hy = (p[:, 3, 1] - p[:, 0, 1])[:, None, None]
    K = (hy / hx) * _KX + (hx / hy) * _KY
    M = (hx * hy / 4.0) * _M
    return K, M


def _evaluate(f, x, y):
    if callable(f):
        v = np.asarray(f(x, y))
        return np.broadcast_to(v, np.shape(x)).astype(np.result_type(v, float))
    return np.full(np.shape(x), f, dtype=np.result_type(f, float))


def cell_load(vertices, cells, f):
    """Integrals of f * phi_a over each cell, shape (m, 4)."""
    p = vertices[cells]
    x0, y0 = p[:, 0, 0], p[:, 0, 1]
    hx = p[:, 1, 0] - x0
    hy = p[:, 3, 1] - y0
    out = None
    for xi in _GAUSS_1D:
        for eta in _GAUSS_1D:
            n = _shape(xi, eta)
            fx = _evaluate(f, x0 + (xi + 1) * hx / 2, y0 + (eta + 1) * hy / 2)
            term = (fx * hx * hy / 4.0)[:, None] * n[None, :]
            out = term if out is None else out + term
    return out


def _edge_lengths(vertices, edges):
    d = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    return np.hypot(d[:, 0], d[:, 1])


def edge_mass(vertices, edges):
    """Consistent 2x2 mass matrices of boundary edges: L/3 on, L/6 off the diagonal."""
    L = _edge_lengths(vertices, edges)[:, None, None]
    return L * np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])


def edge_load(vertices, edges, g):
    """Integrals of g * phi_a along each edge, shape (e, 2)."""
    a = vertices[edges[:, 0]]
    b = vertices[edges[:, 1]]
    L = _edge_lengths(vertices, edges)
    out = None
    for s in _GAUSS_1D:
        t = (s + 1) / 2
        x = a + t * (b - a)
        gx = _evaluate(g, x[:, 0], x[:, 1])
        term = (gx * L / 2.0)[:, None] * np.array([1 - t, t])[None, :]
        out = term if out is None else out + term
    return out


def _check_labels(spec, labels):
    missing = set(spec.bc) - set(labels)
    if missing:
        raise ConfigurationError(f"boundary conditions for marks not on the mesh: {sorted(missing)}")


def _dirichlet_values(spec, vertices, edges, labels, n):
    """Prescribed values on Dirichlet vertices (later sides overwrite corners)."""
    g = np.zeros(n, dtype=spec.dtype)
    mask = np.zeros(n, dtype=bool)
    for lab in spec.labels_with(Dirichlet):
        sel = np.array([l == lab for l in labels], dtype=bool)
        v = np.unique(edges[sel])
        g[v] = _evaluate(spec.bc[lab].value, vertices[v, 0], vertices[v, 1])
        mask[v] = True
    return np.flatnonzero(mask).astype(INDEX), g


def _assemble(vertices, cells, coef, edges, edge_cells, labels, spec, alpha=0.0,
              impedance=False, with_rhs=True):
    n = len(vertices)
    dtype = spec.dtype
    if np.iscomplexobj(alpha) and alpha.imag != 0:
        dtype = np.dtype(np.complex128)
    labels = list(labels)

    K, M = element_matrices(vertices, cells)
    Ae = K - spec.omega2 * coef[:, None, None] * M
    rows = [np.repeat(cells, 4, axis=1).ravel()]
    cols = [np.tile(cells, (1, 4)).ravel()]
    vals = [Ae.astype(dtype).ravel()]

    # local wavenumber omega * sqrt(coefficient) of the cell next to each edge
    wave = (spec.omega or 0.0) * np.sqrt(coef[edge_cells])
    absorbing = set(spec.labels_with(Absorbing, Incident))
    is_abs = np.array([l in absorbing for l in labels], dtype=bool)
    is_int = np.array([l == INTERFACE for l in labels], dtype=bool)
    robin = alpha * 1j * wave if impedance else np.full(len(labels), alpha)
    for sel, scale in ((is_abs, 1j * wave), (is_int, robin)):
        if not sel.any() or np.all(scale[sel] == 0):
            continue
        e = edges[sel]
        S = edge_mass(vertices, e) * scale[sel][:, None, None]
        rows.append(np.repeat(e, 2, axis=1).ravel())
        cols.append(np.tile(e, (1, 2)).ravel())
        vals.append(S.astype(dtype).ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)

    b = np.zeros(n, dtype=dtype)
    if with_rhs:
        np.add.at(b, cells, cell_load(vertices, cells, spec.source))
        for lab in spec.labels_with(Incident):
            sel = np.array([l == lab for l in labels], dtype=bool)
            np.add.at(b, edges[sel], edge_load(vertices, edges[sel], spec.bc[lab].g))

    dir_dofs, g = _dirichlet_values(spec, vertices, edges, labels, n)
    if len(dir_dofs):
        is_dir = np.zeros(n, dtype=bool)
        is_dir[dir_dofs] = True
        lift = ~is_dir[rows] & is_dir[cols]
        if with_rhs:
            np.add.at(b, rows[lift], -vals[lift] * g[cols[lift]])
            b[dir_dofs] = g[dir_dofs]
        keep = ~is_dir[rows] & ~is_dir[cols]
        rows = np.concatenate([rows[keep], dir_dofs])
        cols = np.concatenate([cols[keep], dir_dofs])
        vals = np.concatenate([vals[keep], np.ones(len(dir_dofs), dtype=dtype)])
    return csr_from_arrays(rows, cols, vals, n, n), b, dir_dofs


def assemble_global(mesh, dofmap, spec):
    """Assemble ``A x = b`` on the whole mesh.

    Dirichlet dofs become identity rows (and columns, with the known values
    moved to the right-hand side) so that A stays symmetric.
    """
    _check_labels(spec, mesh.boundary_labels)
    if dofmap.n_dofs != mesh.n_vertices:
        raise ConfigurationError("dof map does not match the mesh")
    A, b, dirichlet = _assemble(mesh.vertices, dofmap.cell_dofs, mesh.cell_coefficients,
                                mesh.boundary_edges, mesh.boundary_cells, mesh.boundary_labels, spec)
    return AssembledSystem(A, b, dirichlet)


def assemble_local_robin(local_mesh, spec, alpha=1.0, impedance=False):
    """Local matrix B_i of a subdomain with Robin closure on its interface edges.

    The interface term is ``alpha * S_int``. With ``impedance=True`` the
    Robin coefficient is ``alpha * i * omega * sqrt(c)`` instead, i.e. the
    first-order absorbing operator scaled by ``alpha`` (``c`` is the
    coefficient of the cell next to the edge). Physical boundary conditions
    are treated as in the global assembly; Dirichlet dofs become identity rows.
    """
    if impedance and spec.kind != "helmholtz":
        raise ConfigurationError("impedance interface conditions need a helmholtz problem")
    B, _, _ = _assemble(local_mesh.vertices, local_mesh.cells, local_mesh.cell_coefficients,
                        local_mesh.boundary_edges, local_mesh.boundary_cells,
                        local_mesh.boundary_labels, spec, alpha=alpha, impedance=impedance,
                        with_rhs=False)
    return B


def robin_local_builder(spec, alpha=1.0, impedance=False):
    """Callable ``local_mesh -> B_i`` for optimized Schwarz preconditioners."""

    def build(local_mesh):
        return assemble_local_robin(local_mesh, spec, alpha, impedance)

    return build


def assemble_incident_rhs(mesh, dofmap, spec):
    """Boundary load vector of the incident-marked sides."""
    b = np.zeros(dofmap.n_dofs, dtype=spec.dtype)
    labels = list(mesh.boundary_labels)
    for lab in spec.labels_with(Incident):
        sel = np.array([l == lab for l in labels], dtype=bool)
        e = mesh.boundary_edges[sel]
        np.add.at(b, e, edge_load(mesh.vertices, e, spec.bc[lab].g))
    return b
