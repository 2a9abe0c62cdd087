"""Model problems: Poisson on a rectangle and the 2D dielectric waveguide.

Both builders return a :class:`Problem` bundling the mesh, dof map,
problem description and assembled system, which is what the partitioning
and preconditioner stages need.
"""
from dataclasses import dataclass

import numpy as np

from .assembly import Absorbing, Dirichlet, Incident, Neumann, ProblemSpec, assemble_global
from .exceptions import ConfigurationError
from .mesh import SIDES, q1_dof_map, structured_quad_mesh

# waveguide defaults, lengths in micrometres
WAVELENGTH = 0.6328
CORE_INDEX = 1.457
WIDTH, LENGTH = 2.0, 6.0
CORE_WIDTH = 0.8
BEAM_DECAY = 100.0


@dataclass(frozen=True, eq=False)
class Problem:
    mesh: object
    dofmap: object
    spec: ProblemSpec
    system: object

    @property
    def A(self):
        return self.system.A

    @property
    def b(self):
        return self.system.b

    @property
    def dirichlet_dofs(self):
        return self.system.dirichlet_dofs

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs


def poisson_problem(nx, ny=None, lx=1.0, ly=1.0, source=1.0, dirichlet=SIDES, value=0.0):
    """-lap u = source with u = value on the ``dirichlet`` sides, du/dn = 0 elsewhere."""
    ny = nx if ny is None else ny
    dirichlet = tuple(dirichlet)
    unknown = set(dirichlet) - set(SIDES)
    if unknown:
        raise ConfigurationError(f"unknown sides {sorted(unknown)}")
    mesh = structured_quad_mesh(nx, ny, lx, ly)
    bc = {s: (Dirichlet(value) if s in dirichlet else Neumann()) for s in SIDES}
    spec = ProblemSpec("poisson", source=source, bc=bc)
    dofmap = q1_dof_map(mesh)
    return Problem(mesh, dofmap, spec, assemble_global(mesh, dofmap, spec))


def waveguide_problem(h=0.05, wavelength=WAVELENGTH, core_index=CORE_INDEX, width=WIDTH,
                      length=LENGTH, core_width=CORE_WIDTH, beam_decay=BEAM_DECAY):
    """Scalar dielectric slab waveguide driven from the bottom side.

    The coefficient of the omega^2 term is ``core_index**2`` in the strip
    ``|x - width/2| <= core_width/2`` and 1 in the cladding. The bottom
    side carries the incoming Gaussian ``exp(-beam_decay (x - width/2)^2)``,
    the other three sides are absorbing.

    Parameters
    ----------
    h : float
        Target mesh size; element counts are rounded so that they tile
        the domain exactly.
    """
    if h <= 0:
        raise ConfigurationError("mesh size must be positive")
    nx = max(1, int(round(width / h)))
    ny = max(1, int(round(length / h)))
    marks = {"bottom": "incident", "left": "absorbing", "right": "absorbing", "top": "absorbing"}
    mesh = structured_quad_mesh(nx, ny, width, length, marks)
    xc = mesh.cell_centers()[:, 0]
    core = np.abs(xc - width / 2) <= core_width / 2
    mesh = mesh.with_coefficients(np.where(core, core_index ** 2, 1.0))
    x0 = width / 2

    def beam(x, y):
        return np.exp(-beam_decay * (x - x0) ** 2)

    spec = ProblemSpec("helmholtz", omega=2 * np.pi / wavelength,
                       bc={"incident": Incident(beam), "absorbing": Absorbing()})
    dofmap = q1_dof_map(mesh)
    return Problem(mesh, dofmap, spec, assemble_global(mesh, dofmap, spec))


def elements_per_wavelength(problem, wavelength=WAVELENGTH):
    """Mesh resolution of the shortest local wavelength (inside the core)."""
    c = float(np.max(problem.mesh.cell_coefficients))
    return wavelength / np.sqrt(c) / problem.mesh.h
