"""Weak finite element spaces and the global degree-of-freedom map.

Displacement: {u0, ub} in [P_{j+1}(K)]^2 x [P_j(e)]^2, ub = 0 on the boundary.
Pressure:     {p0, pb} in P_j(K) x P_{j-1}(e), pb = 0 on Dirichlet pressure edges.

Cell-local layout (used by the element operators):
  displacement  [u0_x, u0_y, (ub_x, ub_y) for each side of K in loop order]
  pressure      [p0, pb for each side of K in loop order]
Global layout: [u interiors | free u traces | p interiors | free p traces].
Constrained traces have no global index.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .basis import PolySpace, Projector, dim_pk
from .mesh import Mesh
from .quadrature import cell_rule, edge_rule, load_degree

DISPLACEMENT = "displacement"
PRESSURE = "pressure"

VectorField = Callable[[np.ndarray, float], np.ndarray]
ScalarField = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class SpaceInfo:
    degree: int

    @property
    def u_cell_scalar(self) -> int:
        return dim_pk(self.degree + 1)

    @property
    def u_cell(self) -> int:
        return 2 * self.u_cell_scalar

    @property
    def u_edge_scalar(self) -> int:
        return self.degree + 1

    @property
    def u_edge(self) -> int:
        return 2 * self.u_edge_scalar

    @property
    def p_cell(self) -> int:
        return dim_pk(self.degree)

    @property
    def p_edge(self) -> int:
        return self.degree

    @property
    def grad_p_cell(self) -> int:
        return dim_pk(self.degree - 1)

    def cell_dim(self, kind: str) -> int:
        return self.u_cell if kind == DISPLACEMENT else self.p_cell

    def edge_dim(self, kind: str) -> int:
        return self.u_edge if kind == DISPLACEMENT else self.p_edge


@dataclass
class WeakFunction:
    """Interior coefficients per cell and trace coefficients per edge."""

    kind: str
    interior: np.ndarray
    trace: np.ndarray

    @classmethod
    def zeros(cls, kind: str, mesh: Mesh, info: SpaceInfo) -> "WeakFunction":
        return cls(kind, np.zeros((mesh.n_cells, info.cell_dim(kind))),
                   np.zeros((mesh.n_edges, info.edge_dim(kind))))

    def local(self, mesh: Mesh, k: int) -> np.ndarray:
        """Cell-local coefficient vector of cell k."""
        return np.concatenate([self.interior[k], self.trace[mesh.cell_edges[k]].ravel()])

    def copy(self) -> "WeakFunction":
        return WeakFunction(self.kind, self.interior.copy(), self.trace.copy())

    def __sub__(self, other: "WeakFunction") -> "WeakFunction":
        if other.kind != self.kind:
            raise ValueError(f"cannot subtract a {other.kind} function from a {self.kind} function")
        return WeakFunction(self.kind, self.interior - other.interior, self.trace - other.trace)

    def __mul__(self, alpha: float) -> "WeakFunction":
        return WeakFunction(self.kind, alpha * self.interior, alpha * self.trace)

    __rmul__ = __mul__


class DofMap:
    """Contiguous global numbering of the free degrees of freedom."""

    def __init__(self, mesh: Mesh, info: SpaceInfo):
        self.mesh = mesh
        self.info = info
        free_u = ~mesh.is_boundary
        free_p = ~mesh.pressure_dirichlet
        self.u_edge_slot = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.u_edge_slot[free_u] = np.arange(int(free_u.sum()))
        self.p_edge_slot = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.p_edge_slot[free_p] = np.arange(int(free_p.sum()))

        self.n_u_interior = mesh.n_cells * info.u_cell
        self.n_u_trace = int(free_u.sum()) * info.u_edge
        self.n_p_interior = mesh.n_cells * info.p_cell
        self.n_p_trace = int(free_p.sum()) * info.p_edge
        self.n_u = self.n_u_interior + self.n_u_trace
        self.n_p = self.n_p_interior + self.n_p_trace
        self.total = self.n_u + self.n_p

    @property
    def block_sizes(self) -> Dict[str, int]:
        return {
            "u_interior": self.n_u_interior,
            "u_trace": self.n_u_trace,
            "p_interior": self.n_p_interior,
            "p_trace": self.n_p_trace,
        }

    def _edge_dofs(self, slot: int, offset: int, size: int) -> np.ndarray:
        if slot < 0:
            return np.full(size, -1, dtype=np.int64)
        return offset + slot * size + np.arange(size)

    def u_local(self, k: int) -> np.ndarray:
        """Global indices of cell k's displacement DOFs, -1 where constrained."""
        info = self.info
        parts = [k * info.u_cell + np.arange(info.u_cell)]
        for e in self.mesh.cell_edges[k]:
            parts.append(self._edge_dofs(self.u_edge_slot[e], self.n_u_interior, info.u_edge))
        return np.concatenate(parts)

    def p_local(self, k: int) -> np.ndarray:
        """Global indices of cell k's pressure DOFs (offset by n_u), -1 where constrained."""
        info = self.info
        base = self.n_u
        parts = [base + k * info.p_cell + np.arange(info.p_cell)]
        for e in self.mesh.cell_edges[k]:
            parts.append(self._edge_dofs(self.p_edge_slot[e], base + self.n_p_interior, info.p_edge))
        return np.concatenate(parts)

    def p_block_local(self, k: int) -> np.ndarray:
        """Indices of cell k's pressure DOFs within the pressure block, -1 where constrained."""
        idx = self.p_local(k)
        return np.where(idx >= 0, idx - self.n_u, -1)

    def gather(self, u: WeakFunction, p: WeakFunction) -> np.ndarray:
        """Global vector of the free coefficients of (u, p)."""
        free_u = self.u_edge_slot >= 0
        free_p = self.p_edge_slot >= 0
        return np.concatenate([
            u.interior.ravel(),
            u.trace[free_u][np.argsort(self.u_edge_slot[free_u])].ravel(),
            p.interior.ravel(),
            p.trace[free_p][np.argsort(self.p_edge_slot[free_p])].ravel(),
        ])

    def scatter(self, x: np.ndarray) -> Tuple[WeakFunction, WeakFunction]:
        """Inverse of gather; constrained traces come back as zero."""
        if len(x) != self.total:
            raise ValueError(f"vector has {len(x)} entries, DOF map has {self.total}")
        info, mesh = self.info, self.mesh
        u = WeakFunction.zeros(DISPLACEMENT, mesh, info)
        p = WeakFunction.zeros(PRESSURE, mesh, info)
        o = 0
        u.interior[:] = x[o:o + self.n_u_interior].reshape(mesh.n_cells, info.u_cell)
        o += self.n_u_interior
        free = self.u_edge_slot >= 0
        u.trace[free] = x[o:o + self.n_u_trace].reshape(-1, info.u_edge)[self.u_edge_slot[free]]
        o += self.n_u_trace
        p.interior[:] = x[o:o + self.n_p_interior].reshape(mesh.n_cells, info.p_cell)
        o += self.n_p_interior
        free = self.p_edge_slot >= 0
        if info.p_edge:
            p.trace[free] = x[o:o + self.n_p_trace].reshape(-1, info.p_edge)[self.p_edge_slot[free]]
        return u, p


def build_spaces(mesh: Mesh, j: int) -> Tuple[DofMap, SpaceInfo]:
    """DOF map and space dimensions for polynomial degree j >= 1."""
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
        raise ValueError(f"degree must be an integer, got {j!r}")
    if j < 1:
        raise ValueError(f"degree j={j} is unsupported: the pressure trace space P_(j-1) needs j >= 1")
    info = SpaceInfo(int(j))
    return DofMap(mesh, info), info


def project_displacement(mesh: Mesh, info: SpaceInfo, u: Callable[[np.ndarray], np.ndarray],
                         constrain: bool = True) -> WeakFunction:
    """{Q0 u, Qb u} with Q0 onto [P_{j+1}(K)]^2 and Qb onto [P_j(e)]^2."""
    j = info.degree
    q = load_degree(j)
    w = WeakFunction.zeros(DISPLACEMENT, mesh, info)
    for k in range(mesh.n_cells):
        rule = cell_rule(mesh.cell_vertices(k), q)
        w.interior[k] = Projector(PolySpace.on_cell(mesh, k, j + 1, 2), rule)(u)
    for e in range(mesh.n_edges):
        if constrain and mesh.is_boundary[e]:
            continue
        rule = edge_rule(*mesh.edge_endpoints(e), q)
        w.trace[e] = Projector(PolySpace.on_edge(mesh, e, j, 2), rule)(u)
    return w


def project_pressure(mesh: Mesh, info: SpaceInfo, p: Callable[[np.ndarray], np.ndarray],
                     constrain: bool = True) -> WeakFunction:
    """{Q0 p, Qb p} with Q0 onto P_j(K) and Qb onto P_{j-1}(e)."""
    j = info.degree
    q = load_degree(j)
    w = WeakFunction.zeros(PRESSURE, mesh, info)
    for k in range(mesh.n_cells):
        rule = cell_rule(mesh.cell_vertices(k), q)
        w.interior[k] = Projector(PolySpace.on_cell(mesh, k, j), rule)(p)
    dirichlet = mesh.pressure_dirichlet
    for e in range(mesh.n_edges):
        if constrain and dirichlet[e]:
            continue
        rule = edge_rule(*mesh.edge_endpoints(e), q)
        w.trace[e] = Projector(PolySpace.on_edge(mesh, e, j - 1), rule)(p)
    return w


def interpolate(mesh: Mesh, info: SpaceInfo, u: VectorField, p: ScalarField, t: float,
                constrain: bool = True) -> Tuple[WeakFunction, WeakFunction]:
    """WG interpolants (Q_h u(t), Q_h p(t)); constrained traces are set to zero."""
    return (project_displacement(mesh, info, lambda x: u(x, t), constrain),
            project_pressure(mesh, info, lambda x: p(x, t), constrain))
