"""Quadrature rules on polygons and straight edges.

Polygons are fan-triangulated from the average of their vertices; each fan
triangle carries a collapsed Gauss-Jacobi x Gauss-Legendre product rule.
Edges use Gauss-Legendre. All weights are positive.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values) -> np.ndarray:
        """Integrate values sampled at the rule points (first axis)."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def points_per_direction(degree: int) -> int:
    """Gauss points needed for exactness up to ``degree``."""
    if degree < 0:
        raise ValueError(f"quadrature degree must be >= 0, got {degree}")
    return degree // 2 + 1


@lru_cache(maxsize=None)
def reference_triangle(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rule on the triangle (0,0), (1,0), (0,1); weights sum to 1/2."""
    m = points_per_direction(degree)
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    xl, wl = roots_legendre(m)
    u, wu = 0.5 * (1.0 + xj), 0.25 * wj
    v, wv = 0.5 * (1.0 + xl), 0.5 * wl
    uu, vv = np.meshgrid(u, v, indexing="ij")
    points = np.column_stack([uu.ravel(), ((1.0 - uu) * vv).ravel()])
    weights = np.outer(wu, wv).ravel()
    points.flags.writeable = False
    weights.flags.writeable = False
    return points, weights


@lru_cache(maxsize=None)
def reference_interval(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1]; weights sum to 1."""
    x, w = roots_legendre(points_per_direction(degree))
    s, ws = 0.5 * (1.0 + x), 0.5 * w
    s.flags.writeable = False
    ws.flags.writeable = False
    return s, ws


def cell_rule(vertices, degree: int) -> QuadratureRule:
    """Rule exact for polynomials of total degree <= ``degree`` on a polygon."""
    coords = np.asarray(vertices, dtype=float)
    ref_points, ref_weights = reference_triangle(degree)
    x, y = coords[:, 0], coords[:, 1]
    if 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)) <= 0.0:
        raise ValueError("degenerate (zero-area or clockwise) polygon")
    center = coords.mean(axis=0)
    points, weights = [], []
    for a, b in zip(coords, np.roll(coords, -1, axis=0)):
        da, db = a - center, b - center
        jac = da[0] * db[1] - da[1] * db[0]
        if jac <= 0.0:
            raise ValueError("vertex average lies outside the polygon; fan triangulation fails")
        points.append(center + ref_points[:, :1] * da + ref_points[:, 1:] * db)
        weights.append(ref_weights * jac)
    return QuadratureRule(np.vstack(points), np.concatenate(weights), degree)


def edge_rule(start, end, degree: int) -> QuadratureRule:
    """Gauss-Legendre rule with ceil((degree + 1) / 2) points on a segment."""
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        raise ValueError("zero-length edge")
    s, ws = reference_interval(degree)
    return QuadratureRule(a + s[:, None] * (b - a), ws * length, degree)


def operator_degree(j: int) -> int:
    """Cell rule degree for products of two degree-(j + 1) basis functions."""
    return 2 * (j + 1) + 2


def load_degree(j: int) -> int:
    """Rule degree for integrals against non-polynomial data."""
    return 2 * (j + 1) + 4
