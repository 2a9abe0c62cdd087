"""Non-overlapping partitions, overlap growth and the R_i / D_i operator family.

Two overlap modes are supported. In *element* mode the subdomains are
grown by ``k`` layers of cells through the dual graph and a local mesh is
available for every subdomain (needed for Robin-closed local matrices).
In *node* mode the owned dofs are grown by ``k`` layers in the matrix
graph; this only needs the assembled matrix.
"""
import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._backend import kernels
from .exceptions import ConfigurationError
from .linalg import INDEX
from .mesh import build_local_mesh

RESTRICTED = "restricted"
MULTIPLICITY = "multiplicity"


@dataclass(frozen=True, eq=False)
class Partition:
    """Owner map of a non-overlapping decomposition.

    ``kind`` is "element" when ``owner`` is indexed by cells and "node"
    when it is indexed by dofs.
    """

    n_parts: int
    owner: np.ndarray
    kind: str = "element"

    def __post_init__(self):
        owner = np.array(self.owner, dtype=INDEX)
        owner.setflags(write=False)
        object.__setattr__(self, "owner", owner)
        if self.kind not in ("element", "node"):
            raise ConfigurationError(f"unknown partition kind {self.kind!r}")
        if len(owner) and (owner.min() < 0 or owner.max() >= self.n_parts):
            raise ConfigurationError("owner id out of range")
        if np.any(np.bincount(owner, minlength=self.n_parts) == 0):
            raise ConfigurationError("every subdomain must own at least one entity")

    def members(self, i):
        return np.flatnonzero(self.owner == i)

    def sizes(self):
        return np.bincount(self.owner, minlength=self.n_parts)


def partition_geometric(mesh, px, py):
    """Split the cell grid into ``px`` by ``py`` blocks (ids run x fastest).

    Cell ``(cx, cy)`` goes to block ``(cx*px // nx, cy*py // ny)``.
    """
    if px < 1 or py < 1:
        raise ConfigurationError("subdomain counts must be positive")
    if px * py > mesh.n_cells:
        raise ConfigurationError(f"{px}x{py} subdomains exceed {mesh.n_cells} cells")
    if px > mesh.nx or py > mesh.ny:
        raise ConfigurationError(f"{px}x{py} subdomains do not fit a {mesh.nx}x{mesh.ny} mesh")
    cx = np.tile(np.arange(mesh.nx), mesh.ny)
    cy = np.repeat(np.arange(mesh.ny), mesh.nx)
    owner = (cx * px) // mesh.nx + px * ((cy * py) // mesh.ny)
    return Partition(px * py, owner, "element")


def partition_graph_greedy(graph, n_parts, seed=None, kind="element"):
    """Greedy BFS region growing on ``graph``.

    Each part starts from the lowest-numbered unassigned node (or, with an
    integer ``seed``, from a seeded random permutation of the nodes) and
    absorbs nodes in BFS order until it holds ``ceil(remaining / parts_left)``
    of them. Disconnected leftovers are handled by reseeding. Pass
    ``kind="node"`` when ``graph`` is a dof graph.
    """
    n = graph.n_nodes
    if n_parts < 1:
        raise ConfigurationError("need at least one part")
    if n_parts > n:
        raise ConfigurationError(f"{n_parts} parts requested for a graph of {n} nodes")
    if seed is None:
        order = np.arange(n, dtype=INDEX)
    else:
        order = np.random.default_rng(seed).permutation(n).astype(INDEX)
    owner = kernels.greedy_grow(graph.indptr, graph.indices, n_parts, order)
    return Partition(n_parts, owner, kind)


def _lowest_cell_owner(partition, dofmap):
    owner = np.full(dofmap.n_dofs, partition.n_parts, dtype=INDEX)
    np.minimum.at(owner, dofmap.cell_dofs, partition.owner[:, None])
    return owner


def node_partition_from_elements(partition, dofmap):
    """Give each dof to the lowest-id subdomain owning one of its cells.

    Raises ConfigurationError if a subdomain ends up with no dof, which
    happens when all its vertices also belong to lower-id subdomains.
    """
    return Partition(partition.n_parts, _lowest_cell_owner(partition, dofmap), "node")


def _closure(graph, members, k):
    seeds = np.zeros(graph.n_nodes, dtype=np.uint8)
    seeds[members] = 1
    dist = kernels.bfs_distance(graph.indptr, graph.indices, seeds, int(k))
    return np.flatnonzero(dist >= 0).astype(INDEX)


def _bbox_size(points):
    return float(np.max(points.max(axis=0) - points.min(axis=0)))


@dataclass(frozen=True, eq=False)
class OverlappingDecomposition:
    """Overlapping subdomains and the dof sets derived from them.

    Attributes
    ----------
    dofs : list of ndarray
        Sorted global dofs V_i of each overlapping subdomain.
    interface : list of ndarray
        Dofs of V_i on the subdomain boundary but off the physical boundary.
    owner : ndarray
        Unique owner of every dof; defines the restricted scaling and the
        coarse basis.
    H : ndarray
        Bounding-box diameter of each non-overlapping subdomain.
    """

    mode: str
    n_dofs: int
    k: int
    h: float
    dofs: list
    interface: list
    owner: np.ndarray
    multiplicity: np.ndarray
    H: np.ndarray
    base_elements: list = None
    elements: list = None
    mesh: object = None

    @property
    def n_subdomains(self):
        return len(self.dofs)

    @property
    def delta(self):
        return self.k * self.h

    @cached_property
    def interior(self):
        return [np.setdiff1d(v, s, assume_unique=True) for v, s in zip(self.dofs, self.interface)]

    def owned(self, i):
        return np.flatnonzero(self.owner == i)

    def delta_over_H(self):
        """Largest relative overlap k*h / H_i over the subdomains."""
        return float(np.max(self.delta / self.H))

    def delta_over_H_pct(self):
        return round(100.0 * self.delta_over_H(), 1)

    def local_mesh(self, i):
        if self.mode != "element" or self.mesh is None:
            raise ConfigurationError("local meshes need an element-based decomposition")
        return self._local_meshes[i]

    @cached_property
    def _local_meshes(self):
        return [build_local_mesh(self.mesh, e) for e in self.elements]


def _multiplicity(n_dofs, dofs):
    mult = np.zeros(n_dofs, dtype=INDEX)
    for v in dofs:
        mult[v] += 1
    return mult


def extend_overlap_elements(partition, dual, k, dofmap, mesh):
    """Grow every subdomain by ``k`` layers of cells through the dual graph.

    ``k = 0`` keeps the non-overlapping cells; the interface is then the
    cut between subdomains.
    """
    if partition.kind != "element":
        raise ConfigurationError("element overlap needs an element partition")
    if k < 0:
        raise ConfigurationError("overlap layers must be non-negative")
    if dual.n_nodes != mesh.n_cells:
        raise ConfigurationError("dual graph does not match the mesh")
    boundary_vertices = np.zeros(dofmap.n_dofs, dtype=bool)
    boundary_vertices[mesh.boundary_edges.ravel()] = True

    base, grown, dofs, interface, H = [], [], [], [], []
    for i in range(partition.n_parts):
        e_i = partition.members(i)
        e_ext = _closure(dual, e_i, k)
        local = build_local_mesh(mesh, e_ext)
        glob = local.global_dof_of_local_dof
        iface = glob[local.interface_vertices()] if local.interface_flags.any() else np.empty(0, INDEX)
        iface = np.sort(iface[~boundary_vertices[iface]]).astype(INDEX)
        base.append(e_i)
        grown.append(e_ext)
        dofs.append(glob.copy())
        interface.append(iface)
        H.append(_bbox_size(mesh.vertices[np.unique(mesh.cells[e_i])]))

    # a subdomain may own no dof here; the coarse space drops it
    owner = _lowest_cell_owner(partition, dofmap)
    return OverlappingDecomposition(
        mode="element", n_dofs=dofmap.n_dofs, k=int(k), h=mesh.h, dofs=dofs,
        interface=interface, owner=owner, multiplicity=_multiplicity(dofmap.n_dofs, dofs),
        H=np.array(H), base_elements=base, elements=grown, mesh=mesh)


def extend_overlap_nodes(node_partition, nodes, k, dof_coords=None, h=float("nan")):
    """Grow the owned dofs of every subdomain by ``k`` layers in the node graph.

    No interface set is recorded: local matrices are the plain principal
    submatrices R_i A R_i^T. ``dof_coords`` (optional) is only used to
    report subdomain diameters.
    """
    if node_partition.kind != "node":
        raise ConfigurationError("node overlap needs a node partition")
    if k < 0:
        raise ConfigurationError("overlap layers must be non-negative")
    n = nodes.n_nodes
    if len(node_partition.owner) != n:
        raise ConfigurationError("node partition does not match the graph")
    dofs, H = [], []
    for i in range(node_partition.n_parts):
        owned = node_partition.members(i)
        dofs.append(_closure(nodes, owned, k))
        H.append(_bbox_size(dof_coords[owned]) if dof_coords is not None else np.nan)
    return OverlappingDecomposition(
        mode="node", n_dofs=n, k=int(k), h=float(h), dofs=dofs,
        interface=[np.empty(0, INDEX) for _ in dofs], owner=node_partition.owner.copy(),
        multiplicity=_multiplicity(n, dofs), H=np.array(H, dtype=float))


def unique_owner_assignment(decomp):
    """dof -> subdomain map; lowest subdomain id wins ties."""
    return decomp.owner


@dataclass(frozen=True, eq=False)
class RestrictionMap:
    """Binary restriction R_i to the sorted dof list; ``prolong`` is R_i^T."""

    subdomain: int
    dofs: np.ndarray
    n: int

    def restrict(self, x):
        return np.asarray(x)[self.dofs]

    def prolong(self, y):
        y = np.asarray(y)
        out = np.zeros(self.n, dtype=y.dtype)
        out[self.dofs] = y
        return out

    __call__ = restrict


def restriction(decomp, i):
    return RestrictionMap(i, decomp.dofs[i], decomp.n_dofs)


@dataclass(frozen=True, eq=False)
class ScalingVector:
    """Diagonal of D_i, one weight per dof of V_i."""

    subdomain: int
    weights: np.ndarray


def scalings(decomp, mode=RESTRICTED):
    """Partition-of-unity weights: sum_i R_i^T D_i R_i = I.

    ``restricted`` gives binary weights (1 on the dofs a subdomain uniquely
    owns); ``multiplicity`` gives 1 / (number of subdomains holding the dof).
    """
    if mode == RESTRICTED:
        return [ScalingVector(i, (decomp.owner[v] == i).astype(float))
                for i, v in enumerate(decomp.dofs)]
    if mode == MULTIPLICITY:
        return [ScalingVector(i, 1.0 / decomp.multiplicity[v]) for i, v in enumerate(decomp.dofs)]
    raise ConfigurationError(f"unknown scaling mode {mode!r}")


def write_decomposition_csv(path, decomp, dof_coords=None):
    """Per-dof owner and multiplicity, ready for scatter plots."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dof", "x", "y", "owner", "multiplicity"])
        for d in range(decomp.n_dofs):
            x, y = (dof_coords[d] if dof_coords is not None else (np.nan, np.nan))
            w.writerow([d, repr(float(x)), repr(float(y)), int(decomp.owner[d]),
                        int(decomp.multiplicity[d])])
