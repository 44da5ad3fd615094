"""Weak Galerkin finite elements for the two-field Biot model on polygonal meshes."""

from .errors import ConfigError, MeshError, MeshFormatError, SolverError, WgBiotError
from .mesh import (Mesh, dump_mesh, generate_hybrid, generate_rectangular, generate_triangular,
                   load_mesh)
from .problems import ProblemSpec, make_problem, problem_locking, problem_poly, steady_linear
from .stepper import TimeGrid, run
from .system import assemble, build_discretization

__version__ = "0.1.0"
