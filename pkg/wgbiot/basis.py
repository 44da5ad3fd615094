"""Scaled monomial bases on cells and edges, mass matrices and L2 projectors.

Cell basis functions are ((x - x_K)/h_K)^a ((y - y_K)/h_K)^b with a + b <= j,
ordered by total degree and then by the power of y. Edge basis functions are
powers of s = ((x - m_e) . t_e)/|e|, where t_e is the global edge direction,
so trace coefficients mean the same thing from both sides of an edge.
Vector and matrix valued spaces are componentwise copies; their coefficient
vectors are the component blocks laid end to end.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .quadrature import QuadratureRule

CELL = "cell"
EDGE = "edge"

Field = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


def dim_pk(degree: int) -> int:
    """Dimension of P_degree in two variables."""
    return 0 if degree < 0 else (degree + 1) * (degree + 2) // 2


def monomial_exponents(degree: int) -> np.ndarray:
    return np.array([(d - b, b) for d in range(degree + 1) for b in range(d + 1)],
                    dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class PolySpace:
    degree: int
    kind: str
    center: np.ndarray
    scale: float
    components: int = 1
    tangent: Optional[np.ndarray] = None

    @classmethod
    def on_cell(cls, mesh, k: int, degree: int, components: int = 1) -> "PolySpace":
        return cls(degree, CELL, mesh.centroids[k], float(mesh.diameters[k]), components)

    @classmethod
    def on_edge(cls, mesh, e: int, degree: int, components: int = 1) -> "PolySpace":
        return cls(degree, EDGE, mesh.edge_midpoints[e], float(mesh.edge_lengths[e]),
                   components, mesh.edge_tangents[e])

    @property
    def scalar_dim(self) -> int:
        if self.kind == CELL:
            return dim_pk(self.degree)
        return max(self.degree + 1, 0)

    @property
    def dim(self) -> int:
        return self.components * self.scalar_dim

    def _local(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float).reshape(-1, 2) - self.center) / self.scale

    def evaluate(self, points) -> np.ndarray:
        """Scalar basis values, shape (n_points, scalar_dim)."""
        x = self._local(points)
        if self.kind == EDGE:
            s = x @ self.tangent
            return s[:, None] ** np.arange(self.scalar_dim)
        exps = monomial_exponents(self.degree)
        return x[:, :1] ** exps[:, 0] * x[:, 1:] ** exps[:, 1]

    def gradient(self, points) -> np.ndarray:
        """Scalar basis gradients, shape (n_points, scalar_dim, 2)."""
        if self.kind != CELL:
            raise ValueError("gradients are only defined for cell spaces")
        x = self._local(points)
        exps = monomial_exponents(self.degree)
        a, b = exps[:, 0], exps[:, 1]
        dx = a * x[:, :1] ** np.maximum(a - 1, 0) * x[:, 1:] ** b
        dy = b * x[:, :1] ** a * x[:, 1:] ** np.maximum(b - 1, 0)
        return np.stack([dx, dy], axis=-1) / self.scale

    def values(self, coefficients, points) -> np.ndarray:
        """Evaluate a coefficient vector; shape (n_points,) or (n_points, components)."""
        c = np.asarray(coefficients, dtype=float).reshape(self.components, self.scalar_dim)
        vals = self.evaluate(points) @ c.T
        return vals[:, 0] if self.components == 1 else vals


def scalar_mass(space: PolySpace, rule: QuadratureRule) -> np.ndarray:
    phi = space.evaluate(rule.points)
    m = phi.T @ (rule.weights[:, None] * phi)
    return 0.5 * (m + m.T)


def mass_matrix(space: PolySpace, rule: QuadratureRule) -> np.ndarray:
    """Mass matrix of the full (possibly vector valued) space."""
    m = scalar_mass(space, rule)
    return np.kron(np.eye(space.components), m) if space.components > 1 else m


class Projector:
    """L2 projection onto a PolySpace with a cached Cholesky factor."""

    def __init__(self, space: PolySpace, rule: QuadratureRule):
        self.space = space
        self.rule = rule
        self._phi = space.evaluate(rule.points)
        self.mass = scalar_mass(space, rule)
        try:
            self._factor = cho_factor(self.mass)
        except LinAlgError as exc:
            raise ValueError(f"singular {space.kind} mass matrix for degree {space.degree}") from exc

    def moments(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=float).reshape(len(self.rule.weights), -1)
        return self._phi.T @ (self.rule.weights[:, None] * vals)

    def solve(self, moments) -> np.ndarray:
        return cho_solve(self._factor, moments)

    def __call__(self, f: Field) -> np.ndarray:
        values = f(self.rule.points) if callable(f) else f
        coeffs = self.solve(self.moments(values))
        if coeffs.shape[1] != self.space.components:
            raise ValueError(f"field has {coeffs.shape[1]} components, space expects "
                             f"{self.space.components}")
        return coeffs.T.ravel()


def project(f: Field, space: PolySpace, rule: QuadratureRule) -> np.ndarray:
    """Coefficients c solving M c = (f, phi_a)."""
    return Projector(space, rule)(f)
