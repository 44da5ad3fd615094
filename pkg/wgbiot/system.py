"""Global assembly of the coupled step system and its sparse solve.

One backward-Euler step solves

  [ A_u      -B^T              ] [u^n]   [ F(t_n)                                   ]
  [ -B   -(c0 M_p + tau A_p)   ] [p^n] = [ -tau G(t_n) - tau N(t_n) - c0 M_p p^{n-1} - B u^{n-1} ]

which is the pressure equation multiplied by -tau. The matrix does not
depend on n, so it is factored once per (mesh, degree, tau, coefficients).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import humanize
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, minres, splu

from .errors import SolverError
from .forms import (LocalForms, build_all_forms, displacement_load_kernel, neumann_kernel,
                    pressure_load_kernel)
from .mesh import Mesh
from .weakops import ElementOperators, build_all
from .weakspace import DofMap, SpaceInfo, build_spaces


SOLVERS = ("direct", "minres")

# Refinement sweeps of the MINRES solve and the relative correction that ends them.
MINRES_SWEEPS = 4
MINRES_STEP_TOL = 1e-12

BodyForce = Callable[[np.ndarray, float], np.ndarray]
Source = Callable[[np.ndarray, float], np.ndarray]
Flux = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class TripletBuilder:
    """COO accumulator that drops rows and columns marked -1."""

    def __init__(self, shape):
        self.shape = shape
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.vals: List[np.ndarray] = []

    def add(self, rows: np.ndarray, cols: np.ndarray, block: np.ndarray) -> None:
        keep_r = rows >= 0
        keep_c = cols >= 0
        block = block[np.ix_(keep_r, keep_c)]
        r, c = np.meshgrid(rows[keep_r], cols[keep_c], indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(block.ravel())

    def tocsr(self) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix(self.shape)
        m = sp.coo_matrix((np.concatenate(self.vals),
                           (np.concatenate(self.rows), np.concatenate(self.cols))),
                          shape=self.shape)
        return m.tocsr()


@dataclass(eq=False)
class Discretization:
    mesh: Mesh
    info: SpaceInfo
    dofs: DofMap
    ops: List[ElementOperators]
    forms: List[LocalForms]
    lam: float
    mu: float
    kappa: float
    c0: float

    @property
    def degree(self) -> int:
        return self.info.degree


def build_discretization(mesh: Mesh, j: int, lam: float = 1.0, mu: float = 1.0,
                         kappa: float = 1.0, c0: float = 1.0) -> Discretization:
    dofs, info = build_spaces(mesh, j)
    ops = build_all(mesh, info)
    forms = build_all_forms(ops, lam, mu, kappa, c0)
    logging.debug(f"discretized {mesh!r} with j={j}: {humanize.intcomma(dofs.total)} DOFs")
    return Discretization(mesh, info, dofs, ops, forms, lam, mu, kappa, c0)


class LoadOperators:
    """Sparse maps from field samples at all load points to load vectors."""

    def __init__(self, disc: Discretization):
        dofs, info, mesh = disc.dofs, disc.info, disc.mesh
        sizes = [len(ops.load_rule.weights) for ops in disc.ops]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        n_points = int(offsets[-1])
        self.points = np.vstack([ops.load_rule.points for ops in disc.ops])

        fu = TripletBuilder((dofs.n_u, 2 * n_points))
        fp = TripletBuilder((dofs.n_p, n_points))
        for ops, off, nq in zip(disc.ops, offsets, sizes):
            k = ops.cell
            rows_u = dofs.u_local(k)[:info.u_cell]
            cols_u = np.concatenate([off + np.arange(nq), n_points + off + np.arange(nq)])
            fu.add(rows_u, cols_u, displacement_load_kernel(ops))
            rows_p = dofs.p_block_local(k)[:info.p_cell]
            fp.add(rows_p, off + np.arange(nq), pressure_load_kernel(ops))
        self.displacement = fu.tocsr()
        self.pressure = fp.tocsr()

        edge_points, edge_normals, edge_blocks = [], [], []
        for e in np.flatnonzero(mesh.neumann):
            k, side = int(mesh.edge_cells[e, 0]), int(mesh.edge_local[e, 0])
            ops = disc.ops[k]
            pts = ops.load_edge_rules[side].points
            edge_points.append(pts)
            edge_normals.append(np.repeat(ops.normals[side][None, :], len(pts), axis=0))
            edge_blocks.append((k, side, len(pts)))
        if edge_points:
            self.neumann_points = np.vstack(edge_points)
            self.neumann_normals = np.vstack(edge_normals)
        else:
            self.neumann_points = np.zeros((0, 2))
            self.neumann_normals = np.zeros((0, 2))
        fn = TripletBuilder((dofs.n_p, len(self.neumann_points)))
        off = 0
        for k, side, nq in edge_blocks:
            start = info.p_cell + side * info.p_edge
            rows = dofs.p_block_local(k)[start:start + info.p_edge]
            fn.add(rows, off + np.arange(nq), neumann_kernel(disc.ops[k], side))
            off += nq
        self.neumann = fn.tocsr()

    def body_force(self, f: BodyForce, t: float) -> np.ndarray:
        vals = np.asarray(f(self.points, t), dtype=float).reshape(-1, 2)
        return self.displacement @ np.concatenate([vals[:, 0], vals[:, 1]])

    def source(self, g: Source, t: float) -> np.ndarray:
        return self.pressure @ np.asarray(g(self.points, t), dtype=float).reshape(-1)

    def boundary_flux(self, gamma: Optional[Flux], t: float) -> np.ndarray:
        if gamma is None or not len(self.neumann_points):
            return np.zeros(self.neumann.shape[0])
        vals = np.asarray(gamma(self.neumann_points, self.neumann_normals, t), dtype=float)
        return self.neumann @ vals.reshape(-1)


def backward_error(matrix: sp.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    """Normwise backward error |Kx - b|_inf / (|K|_inf |x|_inf + |b|_inf)."""
    r = np.abs(matrix @ x - rhs).max(initial=0.0)
    row_sums = np.asarray(abs(matrix).sum(axis=1)).ravel()
    scale = (row_sums.max(initial=0.0) * np.abs(x).max(initial=0.0)
             + np.abs(rhs).max(initial=0.0))
    return float(r / scale) if scale > 0.0 else float(r)


@dataclass(eq=False)
class GlobalSystem:
    disc: Discretization
    tau: float
    au: sp.csr_matrix
    b: sp.csr_matrix
    mp: sp.csr_matrix
    ap: sp.csr_matrix
    matrix: sp.csc_matrix
    solver: str = "direct"
    _lu: Optional[object] = field(default=None, repr=False)
    _precond: Optional[LinearOperator] = field(default=None, repr=False)
    _loads: Optional[LoadOperators] = field(default=None, repr=False)

    @property
    def dofs(self) -> DofMap:
        return self.disc.dofs

    @property
    def loads(self) -> LoadOperators:
        if self._loads is None:
            self._loads = LoadOperators(self.disc)
        return self._loads

    def split(self, x: np.ndarray):
        n_u = self.dofs.n_u
        return x[:n_u], x[n_u:]

    def rhs(self, t: float, f: BodyForce, g: Source, gamma: Optional[Flux],
            previous: np.ndarray) -> np.ndarray:
        """Right-hand side of the step ending at time t, given x^{n-1}."""
        u_prev, p_prev = self.split(previous)
        loads = self.loads
        top = loads.body_force(f, t)
        bottom = (-self.tau * loads.source(g, t) - self.tau * loads.boundary_flux(gamma, t)
                  - self.mp @ p_prev - self.b @ u_prev)
        return np.concatenate([top, bottom])

    def factor(self):
        if self._lu is None:
            try:
                self._lu = splu(self.matrix)
            except RuntimeError as exc:
                rows, cols = self.matrix.shape
                logging.error(f"factorization of the {rows} x {cols} step matrix failed: {exc}")
                raise SolverError(f"step matrix is singular ({exc})") from exc
        return self._lu

    def preconditioner(self) -> LinearOperator:
        """Block-diagonal SPD preconditioner diag(A_u, c0 M_p + tau A_p)^-1 for MINRES."""
        if self._precond is None:
            n_u = self.dofs.n_u
            try:
                au_lu = splu(self.au.tocsc())
                sp_lu = splu((self.mp + self.tau * self.ap).tocsc())
            except RuntimeError as exc:
                logging.error(f"factorization of the MINRES preconditioner failed: {exc}")
                raise SolverError(f"preconditioner block is singular ({exc})") from exc

            def apply(r):
                return np.concatenate([au_lu.solve(r[:n_u]), sp_lu.solve(r[n_u:])])
            self._precond = LinearOperator(self.matrix.shape, matvec=apply, dtype=float)
        return self._precond

    def _minres(self, rhs: np.ndarray) -> np.ndarray:
        # Iterative refinement against the assembled matrix; each sweep solves for the correction.
        x = np.zeros_like(rhs)
        r = rhs.copy()
        maxiter = 20 * self.matrix.shape[0]
        for _ in range(MINRES_SWEEPS):
            dx, info = minres(self.matrix, r, M=self.preconditioner(), rtol=1e-12, maxiter=maxiter)
            if info < 0:
                raise SolverError(f"MINRES broke down (info={info})")
            x += dx
            r = rhs - self.matrix @ x
            if np.linalg.norm(dx) <= MINRES_STEP_TOL * np.linalg.norm(x):
                return x
        logging.warning(f"MINRES refinement still moving after {MINRES_SWEEPS} sweeps "
                        f"(backward error {backward_error(self.matrix, x, rhs):.3e})")
        return x

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.solver == "minres":
            return self._minres(rhs)
        x = self.factor().solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("direct solve produced non-finite values")
        return x

    def residual(self, x: np.ndarray, rhs: np.ndarray) -> float:
        return backward_error(self.matrix, x, rhs)

    def energy(self, x: np.ndarray) -> float:
        """a_u(u, u) + c0 |p0|^2 for a global state vector."""
        u, p = self.split(x)
        return float(u @ (self.au @ u) + p @ (self.mp @ p))

    def dump(self, path) -> Path:
        """Write ``i j value`` triplets and a JSON sidecar with the block sizes."""
        path = Path(path)
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with path.open("w") as fh:
            for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
        sidecar = path.with_name(path.name + ".json")
        meta = {
            "shape": list(self.matrix.shape),
            "nnz": int(coo.nnz),
            "tau": self.tau,
            "degree": self.disc.degree,
            "blocks": self.dofs.block_sizes,
            "coefficients": {"lambda": self.disc.lam, "mu": self.disc.mu,
                             "kappa": self.disc.kappa, "c0": self.disc.c0},
        }
        sidecar.write_text(json.dumps(meta, indent=2) + "\n")
        logging.info(f"wrote {humanize.intcomma(coo.nnz)} nonzeros to {path}")
        return sidecar


def assemble(disc: Discretization, tau: float, solver: str = "direct") -> GlobalSystem:
    if not tau > 0.0:
        raise ValueError(f"time step tau must be positive, got {tau}")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}, expected one of {', '.join(SOLVERS)}")
    dofs = disc.dofs
    au = TripletBuilder((dofs.n_u, dofs.n_u))
    b = TripletBuilder((dofs.n_p, dofs.n_u))
    mp = TripletBuilder((dofs.n_p, dofs.n_p))
    ap = TripletBuilder((dofs.n_p, dofs.n_p))
    for lf in disc.forms:
        u_idx = dofs.u_local(lf.cell)
        p_idx = dofs.p_block_local(lf.cell)
        au.add(u_idx, u_idx, lf.au)
        b.add(p_idx, u_idx, lf.b)
        mp.add(p_idx, p_idx, lf.mp)
        ap.add(p_idx, p_idx, lf.ap)
    au_m, b_m, mp_m, ap_m = au.tocsr(), b.tocsr(), mp.tocsr(), ap.tocsr()
    matrix = sp.bmat([[au_m, -b_m.T], [-b_m, -(mp_m + tau * ap_m)]], format="csc")
    logging.debug(f"assembled step matrix: {humanize.intcomma(matrix.shape[0])} unknowns, "
                  f"{humanize.intcomma(matrix.nnz)} nonzeros, tau={tau:g}")
    return GlobalSystem(disc, float(tau), au_m, b_m, mp_m, ap_m, matrix, solver)
