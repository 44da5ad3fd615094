"""Element-wise discrete weak divergence and weak gradients.

For a cell K every operator is a dense matrix from cell-local WG
coefficients to coefficients of its target polynomial space, found by
solving the local mass-matrix system of its defining identity:

  (div_w v, psi)_K  = -(v0, grad psi)_K  + <vb . n, psi>_dK    psi  in P_j(K)
  (grad_w v, phi)_K = -(v0, div phi)_K   + <vb, phi n>_dK      phi  in [P_j(K)]^{2x2}
  (grad_w q, zeta)_K = -(q0, div zeta)_K + <qb, zeta . n>_dK   zeta in [P_{j-1}(K)]^2

All three reduce to a scalar weak partial derivative d_s applied
componentwise. The matrix valued gradient is stored in row-major component
blocks (dv1/dx, dv1/dy, dv2/dx, dv2/dy).
"""

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import PolySpace, Projector, scalar_mass
from .mesh import Mesh
from .quadrature import QuadratureRule, cell_rule, edge_rule, load_degree, operator_degree
from .weakspace import SpaceInfo


@dataclass(eq=False)
class ElementOperators:
    cell: int
    info: SpaceInfo
    area: float
    edges: np.ndarray
    normals: np.ndarray
    u_space: PolySpace
    p_space: PolySpace
    grad_p_space: PolySpace
    u_edge_spaces: List[PolySpace]
    p_edge_spaces: List[PolySpace]
    rule: QuadratureRule
    load_rule: QuadratureRule
    edge_rules: List[QuadratureRule]
    load_edge_rules: List[QuadratureRule]
    mass_u: np.ndarray
    mass_p: np.ndarray
    mass_grad_p: np.ndarray
    mass_u_edges: List[np.ndarray]
    mass_p_edges: List[np.ndarray]
    div: np.ndarray
    grad: np.ndarray
    grad_p: np.ndarray
    jump_u: List[np.ndarray]
    jump_p: List[np.ndarray]
    u_components: Tuple[np.ndarray, np.ndarray] = field(repr=False)

    @property
    def n_u(self) -> int:
        return self.div.shape[1]

    @property
    def n_p(self) -> int:
        return self.grad_p.shape[1]

    def project_u(self, u: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Local coefficients of Q_h u = {Q0 u, Qb u} (no boundary constraint)."""
        parts = [Projector(self.u_space, self.load_rule)(u)]
        for space, rule in zip(self.u_edge_spaces, self.load_edge_rules):
            parts.append(Projector(space, rule)(u))
        return np.concatenate(parts)

    def project_p(self, p: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Local coefficients of Q_h p = {Q0 p, Qb p} (no boundary constraint)."""
        parts = [Projector(self.p_space, self.load_rule)(p)]
        for space, rule in zip(self.p_edge_spaces, self.load_edge_rules):
            parts.append(Projector(space, rule)(p))
        return np.concatenate(parts)


def _scalar_layout(n_interior: int, edge_sizes: Sequence[int], components: int):
    """Index arrays of each component inside a componentwise local vector."""
    per_component = []
    offsets = np.cumsum([components * n_interior] + [components * s for s in edge_sizes])[:-1]
    for r in range(components):
        idx = [r * n_interior + np.arange(n_interior)]
        for off, s in zip(offsets, edge_sizes):
            idx.append(off + r * s + np.arange(s))
        per_component.append(np.concatenate(idx))
    return tuple(per_component)


def weak_partials(interior: PolySpace, edge_spaces: Sequence[PolySpace], test: PolySpace,
                  rule: QuadratureRule, edge_rules: Sequence[QuadratureRule],
                  normals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Matrices of the scalar weak partials d/dx, d/dy into ``test``.

    Columns follow the scalar local layout [interior, side 0, side 1, ...].
    """
    nt = test.scalar_dim
    ni = interior.scalar_dim
    sizes = [s.scalar_dim for s in edge_spaces]
    rhs = np.zeros((2, nt, ni + sum(sizes)))
    phi = interior.evaluate(rule.points)
    dpsi = test.gradient(rule.points)
    w = rule.weights
    for s in range(2):
        rhs[s, :, :ni] = -np.einsum("q,qt,qi->ti", w, dpsi[:, :, s], phi)
    offset = ni
    for space, erule, n, size in zip(edge_spaces, edge_rules, normals, sizes):
        block = np.einsum("q,qt,qk->tk", erule.weights, test.evaluate(erule.points),
                          space.evaluate(erule.points))
        for s in range(2):
            rhs[s, :, offset:offset + size] = n[s] * block
        offset += size
    factor = cho_factor(scalar_mass(test, rule))
    return cho_solve(factor, rhs[0]), cho_solve(factor, rhs[1])


def _trace_jumps(interior: PolySpace, edge_spaces: Sequence[PolySpace],
                 edge_rules: Sequence[QuadratureRule], components: int,
                 layout: Tuple[np.ndarray, ...], n_local: int):
    """Matrices of (Qb v0 - vb) per side, and the side mass matrices."""
    ni = interior.scalar_dim
    jumps, masses = [], []
    for i, (space, erule) in enumerate(zip(edge_spaces, edge_rules)):
        ne = space.scalar_dim
        chi = space.evaluate(erule.points)
        me = chi.T @ (erule.weights[:, None] * chi)
        coupling = chi.T @ (erule.weights[:, None] * interior.evaluate(erule.points))
        trace_of_interior = cho_solve(cho_factor(me), coupling)
        t = np.zeros((components * ne, n_local))
        for r in range(components):
            cols = layout[r]
            rows = slice(r * ne, (r + 1) * ne)
            t[rows, cols[:ni]] = trace_of_interior
            side = cols[ni + sum(s.scalar_dim for s in edge_spaces[:i]):][:ne]
            t[rows, side] = -np.eye(ne)
        jumps.append(t)
        masses.append(me)
    return jumps, masses


def build_element_ops(mesh: Mesh, k: int, info: SpaceInfo) -> ElementOperators:
    j = info.degree
    coords = mesh.cell_vertices(k)
    edges = mesh.cell_edges[k]
    normals = mesh.cell_normals(k)
    rule = cell_rule(coords, operator_degree(j))
    load_rule = cell_rule(coords, load_degree(j))
    edge_rules = [edge_rule(*mesh.edge_endpoints(e), operator_degree(j)) for e in edges]
    load_edge_rules = [edge_rule(*mesh.edge_endpoints(e), load_degree(j)) for e in edges]

    u_space = PolySpace.on_cell(mesh, k, j + 1, 2)
    p_space = PolySpace.on_cell(mesh, k, j)
    grad_p_space = PolySpace.on_cell(mesh, k, j - 1, 2)
    u_edge_spaces = [PolySpace.on_edge(mesh, e, j, 2) for e in edges]
    p_edge_spaces = [PolySpace.on_edge(mesh, e, j - 1) for e in edges]

    u_scalar = PolySpace.on_cell(mesh, k, j + 1)
    u_edge_scalar = [PolySpace.on_edge(mesh, e, j) for e in edges]
    p_test = PolySpace.on_cell(mesh, k, j)
    g_test = PolySpace.on_cell(mesh, k, j - 1)

    m = len(edges)
    n_u = info.u_cell + m * info.u_edge
    n_p = info.p_cell + m * info.p_edge
    u_layout = _scalar_layout(info.u_cell_scalar, [info.u_edge_scalar] * m, 2)
    p_layout = _scalar_layout(info.p_cell, [info.p_edge] * m, 1)

    sx, sy = weak_partials(u_scalar, u_edge_scalar, p_test, rule, edge_rules, normals)
    nj = info.p_cell
    div = np.zeros((nj, n_u))
    div[:, u_layout[0]] += sx
    div[:, u_layout[1]] += sy
    grad = np.zeros((4 * nj, n_u))
    for r in range(2):
        for s, part in enumerate((sx, sy)):
            block = 2 * r + s
            grad[block * nj:(block + 1) * nj, u_layout[r]] = part

    gx, gy = weak_partials(p_space, p_edge_spaces, g_test, rule, edge_rules, normals)
    ng = info.grad_p_cell
    grad_p = np.zeros((2 * ng, n_p))
    grad_p[:ng, p_layout[0]] = gx
    grad_p[ng:, p_layout[0]] = gy

    jump_u, mass_u_edges = _trace_jumps(u_scalar, u_edge_scalar, edge_rules, 2, u_layout, n_u)
    jump_p, mass_p_edges = _trace_jumps(p_space, p_edge_spaces, edge_rules, 1, p_layout, n_p)

    return ElementOperators(
        cell=k, info=info, area=float(mesh.areas[k]),
        edges=edges, normals=normals,
        u_space=u_space, p_space=p_space, grad_p_space=grad_p_space,
        u_edge_spaces=u_edge_spaces, p_edge_spaces=p_edge_spaces,
        rule=rule, load_rule=load_rule, edge_rules=edge_rules, load_edge_rules=load_edge_rules,
        mass_u=scalar_mass(u_scalar, rule), mass_p=scalar_mass(p_test, rule),
        mass_grad_p=scalar_mass(g_test, rule),
        mass_u_edges=mass_u_edges, mass_p_edges=mass_p_edges,
        div=div, grad=grad, grad_p=grad_p, jump_u=jump_u, jump_p=jump_p,
        u_components=u_layout,
    )


def build_all(mesh: Mesh, info: SpaceInfo) -> List[ElementOperators]:
    return [build_element_ops(mesh, k, info) for k in range(mesh.n_cells)]


def defining_residual(ops: ElementOperators) -> float:
    """Largest violation of the three defining identities over all unit DOFs.

    Both sides are re-integrated pointwise with the load rules, so the check
    shares no matrix with the operators it verifies.
    """
    info = ops.info
    rule, edge_rules = ops.load_rule, ops.load_edge_rules
    pts, w = rule.points, rule.weights
    psi = ops.p_space.evaluate(pts)
    dpsi = ops.p_space.gradient(pts)
    nj = ops.p_space.scalar_dim
    worst = 0.0

    for col in range(ops.n_u):
        v = np.zeros(ops.n_u)
        v[col] = 1.0
        v0 = ops.u_space.values(v[:info.u_cell], pts)
        lhs_div = psi.T @ (w * (psi @ ops.div[:, col]))
        rhs_div = -np.einsum("q,qtc,qc->t", w, dpsi, v0)
        lhs_grad = np.zeros((2, 2, nj))
        rhs_grad = np.zeros((2, 2, nj))
        for r in range(2):
            for s in range(2):
                block = ops.grad[(2 * r + s) * nj:(2 * r + s + 1) * nj, col]
                lhs_grad[r, s] = psi.T @ (w * (psi @ block))
                rhs_grad[r, s] = -np.einsum("q,qt,q->t", w, dpsi[:, :, s], v0[:, r])
        for i, (space, erule, n) in enumerate(zip(ops.u_edge_spaces, edge_rules, ops.normals)):
            start = info.u_cell + i * info.u_edge
            vb = space.values(v[start:start + info.u_edge], erule.points)
            psi_e = ops.p_space.evaluate(erule.points)
            rhs_div += psi_e.T @ (erule.weights * (vb @ n))
            for r in range(2):
                for s in range(2):
                    rhs_grad[r, s] += psi_e.T @ (erule.weights * vb[:, r] * n[s])
        worst = max(worst, np.abs(lhs_div - rhs_div).max(), np.abs(lhs_grad - rhs_grad).max())

    g_space = ops.grad_p_space
    ng = g_space.scalar_dim
    zeta = g_space.evaluate(pts)
    dzeta = g_space.gradient(pts)
    for col in range(ops.n_p):
        q = np.zeros(ops.n_p)
        q[col] = 1.0
        q0 = ops.p_space.values(q[:info.p_cell], pts)
        lhs = np.zeros((2, ng))
        rhs = np.zeros((2, ng))
        for s in range(2):
            lhs[s] = zeta.T @ (w * (zeta @ ops.grad_p[s * ng:(s + 1) * ng, col]))
            rhs[s] = -np.einsum("q,qt,q->t", w, dzeta[:, :, s], q0)
        for i, (space, erule, n) in enumerate(zip(ops.p_edge_spaces, edge_rules, ops.normals)):
            start = info.p_cell + i * info.p_edge
            qb = space.values(q[start:start + info.p_edge], erule.points)
            zeta_e = g_space.evaluate(erule.points)
            for s in range(2):
                rhs[s] += zeta_e.T @ (erule.weights * qb * n[s])
        worst = max(worst, np.abs(lhs - rhs).max())
    return float(worst)


@dataclass
class CommutativityResidual:
    divergence: float
    gradient: float
    pressure_gradient: float

    @property
    def worst(self) -> float:
        return max(self.divergence, self.gradient, self.pressure_gradient)


def apply_commutativity_check(ops_list: Sequence[ElementOperators],
                              v: Callable[[np.ndarray], np.ndarray],
                              grad_v: Callable[[np.ndarray], np.ndarray],
                              q: Callable[[np.ndarray], np.ndarray],
                              grad_q: Callable[[np.ndarray], np.ndarray]) -> CommutativityResidual:
    """Max coefficient gaps in div_w Q_h v = Q0 div v, grad_w Q_h v = Q0 grad v
    and grad_w Q_h q = Q0 grad q over all cells.

    ``grad_v(x)`` returns shape (n, 2, 2) with entry [r, s] = dv_r/dx_s;
    ``grad_q(x)`` returns shape (n, 2).
    """
    worst_div = worst_grad = worst_gp = 0.0
    for ops in ops_list:
        rule = ops.load_rule
        v_local = ops.project_u(v)
        q_local = ops.project_p(q)
        gv = grad_v(rule.points)
        pj = Projector(ops.p_space, rule)
        div_exact = pj(gv[:, 0, 0] + gv[:, 1, 1])
        grad_exact = np.concatenate([pj(gv[:, r, s]) for r in range(2) for s in range(2)])
        gq_exact = Projector(ops.grad_p_space, rule)(grad_q(rule.points))
        worst_div = max(worst_div, np.abs(ops.div @ v_local - div_exact).max())
        worst_grad = max(worst_grad, np.abs(ops.grad @ v_local - grad_exact).max())
        worst_gp = max(worst_gp, np.abs(ops.grad_p @ q_local - gq_exact).max())
    return CommutativityResidual(float(worst_div), float(worst_grad), float(worst_gp))
