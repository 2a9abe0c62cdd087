"""Structured quadrilateral meshes, their graphs and Q1 dof numbering.

Vertices are numbered lexicographically with x running fastest; cell
``(cx, cy)`` has index ``cy * nx + cx`` and lists its vertices
counterclockwise starting at the lower-left corner. Local edge ``e`` of a
cell joins its vertices ``e`` and ``(e + 1) % 4`` (bottom, right, top, left).
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError
from .linalg import INDEX

SIDES = ("bottom", "right", "top", "left")
INTERFACE = "interface"


def _ro(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Axis-aligned rectangular mesh of (0, lx) x (0, ly).

    ``cell_coefficients`` is the per-cell auxiliary data (the multiplier of
    the zeroth order term in Helmholtz problems; 1 by default).
    """

    nx: int
    ny: int
    lx: float
    ly: float
    vertices: np.ndarray
    cells: np.ndarray
    boundary_edges: np.ndarray
    boundary_cells: np.ndarray
    boundary_labels: tuple
    cell_coefficients: np.ndarray

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return self.ly / self.ny

    @property
    def h(self):
        return max(self.hx, self.hy)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def labels(self):
        return sorted(set(self.boundary_labels))

    def with_coefficients(self, coefficients):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (self.n_cells,):
            raise ConfigurationError("need one coefficient per cell")
        return Mesh(self.nx, self.ny, self.lx, self.ly, self.vertices, self.cells,
                    self.boundary_edges, self.boundary_cells, self.boundary_labels,
                    _ro(coefficients))

    def cell_centers(self):
        return self.vertices[self.cells].mean(axis=1)

    def boundary_vertices(self, labels=None):
        """Sorted vertices on boundary edges (optionally only those labelled ``labels``)."""
        mask = np.ones(len(self.boundary_edges), dtype=bool)
        if labels is not None:
            mask = np.isin(np.asarray(self.boundary_labels, dtype=object), list(labels))
        return np.unique(self.boundary_edges[mask])


def structured_quad_mesh(nx, ny, lx=1.0, ly=1.0, mark_scheme=None):
    """Uniform ``nx`` by ``ny`` quadrilateral mesh of the rectangle (0, lx) x (0, ly).

    Parameters
    ----------
    mark_scheme : dict, optional
        Maps side names ("bottom", "right", "top", "left") to boundary
        labels. Sides not listed are labelled with their own name.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ConfigurationError(f"element counts must be positive integers, got {nx}x{ny}")
    if not (lx > 0 and ly > 0):
        raise ConfigurationError(f"extents must be positive, got {lx}x{ly}")
    nx, ny = int(nx), int(ny)
    scheme = {side: side for side in SIDES}
    if mark_scheme:
        unknown = set(mark_scheme) - set(SIDES)
        if unknown:
            raise ConfigurationError(f"unknown sides in mark scheme: {sorted(unknown)}")
        scheme.update(mark_scheme)

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    cx, cy = np.meshgrid(np.arange(nx), np.arange(ny))
    v0 = (cy * (nx + 1) + cx).ravel()
    cells = np.column_stack([v0, v0 + 1, v0 + nx + 2, v0 + nx + 1]).astype(INDEX)

    edges, owners, labels = [], [], []
    sides = {
        "bottom": (np.arange(nx), 0),
        "right": (np.arange(ny) * nx + nx - 1, 1),
        "top": ((ny - 1) * nx + np.arange(nx), 2),
        "left": (np.arange(ny) * nx, 3),
    }
    for side in SIDES:
        c, e = sides[side]
        edges.append(np.column_stack([cells[c, e], cells[c, (e + 1) % 4]]))
        owners.append(c)
        labels += [scheme[side]] * len(c)
    return Mesh(nx, ny, float(lx), float(ly), _ro(vertices), _ro(cells),
                _ro(np.vstack(edges), INDEX), _ro(np.concatenate(owners), INDEX),
                tuple(labels), _ro(np.ones(nx * ny)))


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph in CSR adjacency form, neighbours sorted ascending."""

    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indptr", _ro(self.indptr, INDEX))
        object.__setattr__(self, "indices", _ro(self.indices, INDEX))

    @classmethod
    def from_edges(cls, n, pairs):
        pairs = np.asarray(pairs, dtype=INDEX).reshape(-1, 2)
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        both = np.vstack([pairs, pairs[:, ::-1]])
        key = np.unique(both[:, 0] * max(n, 1) + both[:, 1])
        rows, cols = np.divmod(key, max(n, 1))
        indptr = np.zeros(n + 1, dtype=INDEX)
        np.add.at(indptr, rows + 1, 1)
        return cls(np.cumsum(indptr), cols)

    @property
    def n_nodes(self):
        return len(self.indptr) - 1

    @property
    def n_edges(self):
        return len(self.indices) // 2

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degrees(self):
        return np.diff(self.indptr)

    def edge_list(self):
        rows = np.repeat(np.arange(self.n_nodes), self.degrees())
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def is_symmetric(self):
        fwd = set(map(tuple, np.column_stack(
            [np.repeat(np.arange(self.n_nodes), self.degrees()), self.indices]).tolist()))
        return all((j, i) in fwd for i, j in fwd)

    def has_self_loops(self):
        rows = np.repeat(np.arange(self.n_nodes), self.degrees())
        return bool(np.any(rows == self.indices))


def _edge_keys(cells, n_vertices):
    a = cells
    b = np.roll(cells, -1, axis=1)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return lo * n_vertices + hi


def dual_graph(mesh):
    """Cells are nodes; two cells are adjacent iff they share an edge."""
    return _dual_graph(mesh.cells, mesh.n_vertices)


def _dual_graph(cells, n_vertices):
    keys = _edge_keys(cells, n_vertices).ravel()
    owner = np.repeat(np.arange(len(cells)), 4)
    order = np.argsort(keys, kind="stable")
    keys, owner = keys[order], owner[order]
    same = np.flatnonzero(keys[1:] == keys[:-1])
    return Graph.from_edges(len(cells), np.column_stack([owner[same], owner[same + 1]]))


def node_graph(A):
    """Adjacency of the (symmetrised) nonzero pattern of ``A``, diagonal dropped."""
    if A.n_rows != A.n_cols:
        raise ConfigurationError("node graph needs a square matrix")
    rows = np.repeat(np.arange(A.n_rows), np.diff(A.row_offsets))
    nz = A.values != 0
    return Graph.from_edges(A.n_rows, np.column_stack([rows[nz], A.col_indices[nz]]))


@dataclass(frozen=True, eq=False)
class DofMap:
    cell_dofs: np.ndarray
    n_dofs: int
    dof_coords: np.ndarray


def q1_dof_map(mesh):
    """Bilinear elements: one dof per vertex, numbered like the vertices."""
    return DofMap(_ro(mesh.cells, INDEX), mesh.n_vertices, _ro(mesh.vertices))


@dataclass(frozen=True, eq=False)
class LocalMesh:
    """The cells of one (overlapping) subdomain with compact local numbering.

    Local vertex ``l`` is global vertex ``global_dof_of_local_dof[l]``; the
    map is increasing, so local dofs follow the sorted global dof set.
    ``boundary_labels`` holds the global mark for edges on the physical
    boundary and ``"interface"`` for edges on the subdomain boundary only.
    """

    vertices: np.ndarray
    cells: np.ndarray
    cell_coefficients: np.ndarray
    global_cell_ids: np.ndarray
    global_dof_of_local_dof: np.ndarray
    boundary_edges: np.ndarray
    boundary_cells: np.ndarray
    boundary_labels: tuple
    interface_flags: np.ndarray
    n_global_dofs: int = field(default=0)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    def local_of_global(self):
        """Array mapping global dof -> local dof (-1 outside the subdomain)."""
        out = np.full(self.n_global_dofs, -1, dtype=INDEX)
        out[self.global_dof_of_local_dof] = np.arange(self.n_vertices)
        return out

    def interface_vertices(self):
        return np.unique(self.boundary_edges[self.interface_flags])


def build_local_mesh(mesh, element_set, global_boundary=None):
    """Local triangulation of the cells ``element_set`` of ``mesh``.

    ``global_boundary`` optionally overrides the physical boundary marks as
    a dict ``{(v_lo, v_hi): label}`` of global vertex pairs.
    """
    cells_g = np.unique(np.asarray(element_set, dtype=INDEX))
    if len(cells_g) == 0:
        raise ConfigurationError("cannot build a local mesh from an empty element set")
    if cells_g[0] < 0 or cells_g[-1] >= mesh.n_cells:
        raise ConfigurationError("element index out of range")
    if global_boundary is None:
        global_boundary = {
            (int(min(a, b)), int(max(a, b))): lab
            for (a, b), lab in zip(mesh.boundary_edges.tolist(), mesh.boundary_labels)
        }

    sub = mesh.cells[cells_g]
    verts_g = np.unique(sub)
    to_local = np.full(mesh.n_vertices, -1, dtype=INDEX)
    to_local[verts_g] = np.arange(len(verts_g))
    local_cells = to_local[sub]

    keys = _edge_keys(sub, mesh.n_vertices).ravel()
    uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
    on_boundary = np.sort(first[counts == 1])
    a = sub.ravel()[on_boundary]
    b = np.roll(sub, -1, axis=1).ravel()[on_boundary]
    labels = []
    for va, vb in zip(a.tolist(), b.tolist()):
        labels.append(global_boundary.get((min(va, vb), max(va, vb)), INTERFACE))
    flags = np.array([lab == INTERFACE for lab in labels], dtype=bool)
    return LocalMesh(
        vertices=_ro(mesh.vertices[verts_g]),
        cells=_ro(local_cells, INDEX),
        cell_coefficients=_ro(mesh.cell_coefficients[cells_g]),
        global_cell_ids=_ro(cells_g, INDEX),
        global_dof_of_local_dof=_ro(verts_g, INDEX),
        boundary_edges=_ro(np.column_stack([to_local[a], to_local[b]]).reshape(-1, 2), INDEX),
        boundary_cells=_ro(on_boundary // 4, INDEX),
        boundary_labels=tuple(labels),
        interface_flags=_ro(flags),
        n_global_dofs=mesh.n_vertices,
    )


def write_mesh(path, mesh):
    """ASCII dump: vertex block, cell block (with coefficient), boundary block."""
    with open(path, "w") as fh:
        fh.write(f"# schwarzdd mesh nx={mesh.nx} ny={mesh.ny} lx={float(mesh.lx)!r} ly={float(mesh.ly)!r}\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"cells {mesh.n_cells}\n")
        for c, coef in zip(mesh.cells, mesh.cell_coefficients):
            fh.write(f"{c[0]} {c[1]} {c[2]} {c[3]} {float(coef)!r}\n")
        fh.write(f"boundary {len(mesh.boundary_edges)}\n")
        for (a, b), cell, lab in zip(mesh.boundary_edges, mesh.boundary_cells, mesh.boundary_labels):
            fh.write(f"{a} {b} {cell} {lab}\n")


def read_mesh(path):
    with open(path) as fh:
        header = fh.readline().split()
        meta = dict(tok.split("=") for tok in header[3:])
        nv = int(fh.readline().split()[1])
        verts = np.array([fh.readline().split() for _ in range(nv)], dtype=float)
        nc = int(fh.readline().split()[1])
        rows = [fh.readline().split() for _ in range(nc)]
        nb = int(fh.readline().split()[1])
        brows = [fh.readline().split() for _ in range(nb)]
    cells = np.array([r[:4] for r in rows], dtype=INDEX)
    coef = np.array([r[4] for r in rows], dtype=float)
    return Mesh(int(meta["nx"]), int(meta["ny"]), float(meta["lx"]), float(meta["ly"]),
                _ro(verts), _ro(cells), _ro(np.array([r[:2] for r in brows], dtype=INDEX).reshape(-1, 2)),
                _ro(np.array([r[2] for r in brows], dtype=INDEX)), tuple(r[3] for r in brows),
                _ro(coef))
