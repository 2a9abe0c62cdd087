"""Overlapping Schwarz domain decomposition preconditioners.

One- and two-level AS, RAS, SAS, OAS and ORAS for Q1 finite element
Poisson and Helmholtz problems on structured quadrilateral meshes, with
GMRES and PCG drivers and a config-driven experiment CLI.
"""
from ._backend import BACKEND
from .assembly import (Absorbing, Dirichlet, Incident, Neumann, ProblemSpec, assemble_global,
                       assemble_local_robin, robin_local_builder)
from .exceptions import (ConfigurationError, DimensionError, NotPositiveDefiniteError,
                         SchwarzDDError, SingularMatrixError, StructuralError)
from .krylov import SolveStats, estimate_condition, gmres, pcg
from .linalg import SparseMatrix, csr_from_triplets, extract_submatrix, factorize, spmv
from .mesh import dual_graph, node_graph, q1_dof_map, structured_quad_mesh
from .partition import (extend_overlap_elements, extend_overlap_nodes, node_partition_from_elements,
                        partition_geometric, partition_graph_greedy, restriction, scalings)
from .problems import poisson_problem, waveguide_problem
from .schwarz import SchwarzPreconditioner, build_one_level, build_two_level, combine, schwarz_operator

__version__ = "0.1.0"
