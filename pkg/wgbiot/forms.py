"""Element matrices of the bilinear forms and the load kernels.

  a_u(v, w) = (lam + mu)(div_w v, div_w w) + mu(grad_w v, grad_w w) + s_u(v, w)
  a_p(q, r) = kappa(grad_w q, grad_w r) + s_p(q, r)
  b(v, q)   = (div_w v, q0)
  s(v, w)   = h_K^-1 <Qb v0 - vb, Qb w0 - wb>_dK,  h_K = sqrt(|K|)

Rows and columns follow the cell-local layouts of weakspace.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .mesh import Mesh
from .weakops import ElementOperators
from .weakspace import WeakFunction


def check_coefficients(lam: float, mu: float, kappa: float, c0: float) -> None:
    if not mu > 0.0:
        raise ValueError(f"shear modulus mu must be positive, got {mu}")
    if not kappa > 0.0:
        raise ValueError(f"permeability kappa must be positive, got {kappa}")
    if not lam > -mu:
        raise ValueError(f"lambda must exceed -mu (got lambda={lam}, mu={mu})")
    if not c0 >= 0.0:
        raise ValueError(f"storage coefficient c0 must be nonnegative, got {c0}")


def _symmetric(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _stabilizer(jumps: Sequence[np.ndarray], masses: Sequence[np.ndarray], components: int,
                h: float) -> np.ndarray:
    n = jumps[0].shape[1]
    s = np.zeros((n, n))
    for t, me in zip(jumps, masses):
        weight = np.kron(np.eye(components), me) if components > 1 else me
        s += t.T @ weight @ t
    return _symmetric(s) / h


@dataclass(eq=False)
class LocalForms:
    ops: ElementOperators
    au: np.ndarray
    ap: np.ndarray
    b: np.ndarray
    mp: np.ndarray
    stab_u: np.ndarray
    stab_p: np.ndarray

    @property
    def cell(self) -> int:
        return self.ops.cell


def stabilizer_scale(ops: ElementOperators) -> float:
    """Mesh size in the stabilizer weight: sqrt of the cell area, not its diameter."""
    return math.sqrt(ops.area)


def stabilizer_u(ops: ElementOperators) -> np.ndarray:
    return _stabilizer(ops.jump_u, ops.mass_u_edges, 2, stabilizer_scale(ops))


def stabilizer_p(ops: ElementOperators) -> np.ndarray:
    return _stabilizer(ops.jump_p, ops.mass_p_edges, 1, stabilizer_scale(ops))


def build_local_forms(ops: ElementOperators, lam: float, mu: float, kappa: float,
                      c0: float) -> LocalForms:
    check_coefficients(lam, mu, kappa, c0)
    info = ops.info
    nj = info.p_cell
    ng = info.grad_p_cell
    m = ops.mass_p

    stab_u = stabilizer_u(ops)
    stab_p = stabilizer_p(ops)

    div = ops.div
    au = (lam + mu) * div.T @ m @ div
    for block in range(4):
        g = ops.grad[block * nj:(block + 1) * nj]
        au += mu * g.T @ m @ g
    au = _symmetric(au) + stab_u

    ap = np.zeros((ops.n_p, ops.n_p))
    for s in range(2):
        g = ops.grad_p[s * ng:(s + 1) * ng]
        ap += kappa * g.T @ ops.mass_grad_p @ g
    ap = _symmetric(ap) + stab_p

    b = np.zeros((ops.n_p, ops.n_u))
    b[:nj] = m @ div

    mp = np.zeros((ops.n_p, ops.n_p))
    mp[:nj, :nj] = c0 * m
    return LocalForms(ops, au, ap, b, mp, stab_u, stab_p)


def build_all_forms(ops_list: Sequence[ElementOperators], lam: float, mu: float, kappa: float,
                    c0: float) -> List[LocalForms]:
    return [build_local_forms(ops, lam, mu, kappa, c0) for ops in ops_list]


def displacement_load_kernel(ops: ElementOperators) -> np.ndarray:
    """K with K @ concat(f_x, f_y) = ((f, phi_a)_K) at the load rule points."""
    rule = ops.load_rule
    phi = ops.u_space.evaluate(rule.points) * rule.weights[:, None]
    return np.kron(np.eye(2), phi.T)


def pressure_load_kernel(ops: ElementOperators) -> np.ndarray:
    """K with K @ g = ((g, psi_a)_K) at the load rule points."""
    rule = ops.load_rule
    return (ops.p_space.evaluate(rule.points) * rule.weights[:, None]).T


def neumann_kernel(ops: ElementOperators, side: int) -> np.ndarray:
    """K with K @ gamma = (<gamma, chi_a>_e) at the load rule points of one side."""
    rule = ops.load_edge_rules[side]
    return (ops.p_edge_spaces[side].evaluate(rule.points) * rule.weights[:, None]).T


def quadratic_form(mesh: Mesh, forms: Sequence[LocalForms], w: WeakFunction, attr: str) -> float:
    total = 0.0
    for lf in forms:
        x = w.local(mesh, lf.cell)
        total += float(x @ getattr(lf, attr) @ x)
    return total


def norm_triple_V(mesh: Mesh, forms: Sequence[LocalForms], u: WeakFunction) -> float:
    """|||u|||_V = a_u(u, u)^(1/2)."""
    return math.sqrt(max(quadratic_form(mesh, forms, u, "au"), 0.0))


def norm_triple_W(mesh: Mesh, forms: Sequence[LocalForms], p: WeakFunction) -> float:
    """|||p|||_W = a_p(p, p)^(1/2)."""
    return math.sqrt(max(quadratic_form(mesh, forms, p, "ap"), 0.0))
