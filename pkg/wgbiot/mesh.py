"""Polygonal meshes of the unit square and the plain-text mesh format.

Cells are counterclockwise vertex loops of any size >= 3. Edges are
deduplicated, oriented from the lower to the higher vertex index, and know
their one (boundary) or two (interior) incident cells. Every boundary edge
carries the displacement Dirichlet tag and one pressure tag, Dirichlet by
default.
"""

import logging
import math
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import MeshError, MeshFormatError


DIRICHLET_U = "DU"
DIRICHLET_P = "DP"
NEUMANN_P = "NP"
BOUNDARY_TAGS = (DIRICHLET_U, DIRICHLET_P, NEUMANN_P)

EdgeKey = Tuple[int, int]


def _edge_key(a: int, b: int) -> EdgeKey:
    return (a, b) if a < b else (b, a)


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _on_segment(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> bool:
    return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))


def _segments_meet(p1, p2, q1, q2) -> bool:
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return ((d1 == 0 and _on_segment(q1, q2, p1)) or (d2 == 0 and _on_segment(q1, q2, p2))
            or (d3 == 0 and _on_segment(p1, p2, q1)) or (d4 == 0 and _on_segment(p1, p2, q2)))


def signed_area(coords: np.ndarray) -> float:
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_problem(coords: np.ndarray, loop: Optional[Sequence[int]] = None) -> Optional[str]:
    """Return why a vertex loop is not a simple counterclockwise polygon, or None."""
    k = len(coords)
    if k < 3:
        return f"polygon has {k} vertices, at least 3 are required"
    if loop is not None and len(set(int(i) for i in loop)) != k:
        return "polygon repeats a vertex"
    area = signed_area(coords)
    if area <= 0.0:
        return "polygon is clockwise or degenerate" if area < 0.0 else "polygon has zero area"
    for i in range(k):
        for m in range(i + 2, k):
            if i == 0 and m == k - 1:
                continue
            if _segments_meet(coords[i], coords[(i + 1) % k], coords[m], coords[(m + 1) % k]):
                return f"polygon sides {i} and {m} intersect"
    return None


class Mesh:
    """Immutable 2D polygonal mesh with edge incidence and per-cell geometry."""

    def __init__(self, vertices, cells: Iterable[Sequence[int]],
                 neumann: Optional[Iterable[EdgeKey]] = None,
                 family: str = "custom", level: Optional[int] = None,
                 label: Optional[float] = None):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self.cells: Tuple[np.ndarray, ...] = tuple(np.array(c, dtype=np.int64) for c in cells)
        self.family = family
        self.level = level
        nv = len(self.vertices)
        for k, loop in enumerate(self.cells):
            if len(loop) < 3:
                raise MeshError(f"cell {k} has {len(loop)} vertices, at least 3 are required")
            if loop.min() < 0 or loop.max() >= nv:
                raise MeshError(f"cell {k} references a vertex outside 0..{nv - 1}")

        self._build_edges()
        self._build_geometry()

        self.neumann = np.zeros(self.n_edges, dtype=bool)
        for a, b in (neumann or ()):
            e = self.edge_index.get(_edge_key(int(a), int(b)))
            if e is None or not self.is_boundary[e]:
                raise MeshError(f"({a}, {b}) is not a boundary edge")
            self.neumann[e] = True
        self.label = float(label) if label is not None else self.h

        for arr in (self.vertices, self.edges, self.edge_cells, self.edge_local, self.areas,
                    self.centroids, self.diameters, self.edge_lengths, self.edge_midpoints,
                    self.edge_tangents, self.is_boundary, self.neumann):
            arr.flags.writeable = False

    def _build_edges(self):
        edge_index: Dict[EdgeKey, int] = {}
        edges: List[EdgeKey] = []
        edge_cells: List[List[int]] = []
        edge_local: List[List[int]] = []
        cell_edges = []
        for k, loop in enumerate(self.cells):
            local = []
            m = len(loop)
            for i in range(m):
                a, b = int(loop[i]), int(loop[(i + 1) % m])
                if a == b:
                    raise MeshError(f"cell {k} has a zero-length side at vertex {a}")
                key = _edge_key(a, b)
                e = edge_index.get(key)
                if e is None:
                    e = len(edges)
                    edge_index[key] = e
                    edges.append(key)
                    edge_cells.append([k, -1])
                    edge_local.append([i, -1])
                elif edge_cells[e][1] != -1:
                    raise MeshError(f"edge {key} is shared by more than two cells")
                else:
                    edge_cells[e][1] = k
                    edge_local[e][1] = i
                local.append(e)
            cell_edges.append(np.array(local, dtype=np.int64))
        self.edge_index = edge_index
        self.edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_cells = np.array(edge_cells, dtype=np.int64).reshape(-1, 2)
        self.edge_local = np.array(edge_local, dtype=np.int64).reshape(-1, 2)
        self.cell_edges: Tuple[np.ndarray, ...] = tuple(cell_edges)
        self.is_boundary = self.edge_cells[:, 1] < 0

    def _build_geometry(self):
        areas, centroids, diameters = [], [], []
        for loop in self.cells:
            coords = self.vertices[loop]
            x, y = coords[:, 0], coords[:, 1]
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            cross = x * yn - xn * y
            area = 0.5 * cross.sum()
            if area > 0.0:
                cx = ((x + xn) * cross).sum() / (6.0 * area)
                cy = ((y + yn) * cross).sum() / (6.0 * area)
            else:
                cx, cy = x.mean(), y.mean()
            areas.append(area)
            centroids.append((cx, cy))
            diameters.append(np.max(np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)))
        self.areas = np.array(areas)
        self.centroids = np.array(centroids).reshape(-1, 2)
        self.diameters = np.array(diameters)
        a = self.vertices[self.edges[:, 0]]
        b = self.vertices[self.edges[:, 1]]
        self.edge_lengths = np.linalg.norm(b - a, axis=1)
        self.edge_midpoints = 0.5 * (a + b)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.edge_tangents = (b - a) / self.edge_lengths[:, None]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.is_boundary)

    @property
    def pressure_dirichlet(self) -> np.ndarray:
        """Boolean mask of edges carrying a Dirichlet pressure condition."""
        return self.is_boundary & ~self.neumann

    def cell_vertices(self, k: int) -> np.ndarray:
        return self.vertices[self.cells[k]]

    def cell_normals(self, k: int) -> np.ndarray:
        """Outward unit normals of the sides of cell k, in local edge order."""
        coords = self.cell_vertices(k)
        d = np.roll(coords, -1, axis=0) - coords
        return np.column_stack([d[:, 1], -d[:, 0]]) / np.linalg.norm(d, axis=1)[:, None]

    def edge_endpoints(self, e: int) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.edges[e]
        return self.vertices[a], self.vertices[b]

    def pressure_tag(self, e: int) -> Optional[str]:
        if not self.is_boundary[e]:
            return None
        return NEUMANN_P if self.neumann[e] else DIRICHLET_P

    def with_pressure_tags(self, tag: str) -> "Mesh":
        """Copy of the mesh with every boundary edge given pressure tag DP or NP."""
        if tag not in (DIRICHLET_P, NEUMANN_P):
            raise ValueError(f"pressure tag must be {DIRICHLET_P} or {NEUMANN_P}, got {tag!r}")
        neumann = [tuple(self.edges[e]) for e in self.boundary_edges] if tag == NEUMANN_P else []
        return Mesh(self.vertices, self.cells, neumann, self.family, self.level, self.label)

    def reorder(self, order: Sequence[int]) -> "Mesh":
        """Same mesh with its cells listed in a different order."""
        order = [int(k) for k in order]
        if sorted(order) != list(range(self.n_cells)):
            raise ValueError("order must be a permutation of the cell indices")
        neumann = [tuple(self.edges[e]) for e in np.flatnonzero(self.neumann)]
        return Mesh(self.vertices, [self.cells[k] for k in order], neumann,
                    self.family, self.level, self.label)

    def audit(self, tol: float = 1e-12) -> None:
        """Raise MeshError on the first violated structural invariant."""
        for k, loop in enumerate(self.cells):
            problem = polygon_problem(self.cell_vertices(k), loop)
            if problem:
                raise MeshError(f"cell {k}: {problem}")
            coords = self.cell_vertices(k)
            lengths = np.linalg.norm(np.roll(coords, -1, axis=0) - coords, axis=1)
            flux = (lengths[:, None] * self.cell_normals(k)).sum(axis=0)
            if np.abs(flux).max() > tol * lengths.sum():
                raise MeshError(f"cell {k}: side normals do not close, residual {np.abs(flux).max():.3e}")
        for e, (k0, k1) in enumerate(self.edge_cells):
            if k1 < 0:
                continue
            i0, i1 = self.edge_local[e]
            a0 = self.cells[k0][i0]
            a1 = self.cells[k1][i1]
            if a0 == a1:
                raise MeshError(f"edge {tuple(self.edges[e])} is traversed the same way by cells {k0} and {k1}")
        sides = sum(len(c) for c in self.cells)
        if 2 * self.n_edges != sides + int(self.is_boundary.sum()):
            raise MeshError("edge count does not match cell sides")

    def __repr__(self) -> str:
        return (f"Mesh(family={self.family!r}, cells={self.n_cells}, edges={self.n_edges}, "
                f"h={self.h:.4g})")


def _check_count(n, name: str) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def _grid_vertices(n: int) -> np.ndarray:
    xs = np.arange(n + 1) / n
    return np.column_stack([np.tile(xs, n + 1), np.repeat(xs, n + 1)])


def _square_corners(n: int, i: int, j: int) -> Tuple[int, int, int, int]:
    v00 = j * (n + 1) + i
    v01 = v00 + n + 1
    return v00, v00 + 1, v01 + 1, v01


def generate_triangular(n: int) -> Mesh:
    """n x n squares, each cut by its lower-left to upper-right diagonal."""
    n = _check_count(n, "n")
    cells = []
    for j in range(n):
        for i in range(n):
            v00, v10, v11, v01 = _square_corners(n, i, j)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    mesh = Mesh(_grid_vertices(n), cells, family="triangular", level=n, label=math.sqrt(2.0) / n)
    logging.debug(f"generated {mesh!r}")
    return mesh


def generate_rectangular(n: int) -> Mesh:
    """n x n axis-aligned squares, labelled by 1/n."""
    n = _check_count(n, "n")
    cells = [_square_corners(n, i, j) for j in range(n) for i in range(n)]
    mesh = Mesh(_grid_vertices(n), cells, family="rectangular", level=n, label=1.0 / n)
    logging.debug(f"generated {mesh!r}")
    return mesh


def generate_hybrid(n_sub: int) -> Mesh:
    """Checkerboard triangle/quadrilateral mesh with n_sub subdivisions per side.

    Square (i, j) is cut into two triangles when i + j is even and kept as a
    quadrilateral otherwise, so square (0, 0) is always cut.
    """
    n = _check_count(n_sub, "N_h")
    cells: List[Tuple[int, ...]] = []
    for j in range(n):
        for i in range(n):
            v00, v10, v11, v01 = _square_corners(n, i, j)
            if (i + j) % 2 == 0:
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
            else:
                cells.append((v00, v10, v11, v01))
    mesh = Mesh(_grid_vertices(n), cells, family="hybrid", level=n, label=1.0 / n)
    logging.debug(f"generated {mesh!r}")
    return mesh


GENERATORS = {
    "triangular": generate_triangular,
    "rectangular": generate_rectangular,
    "hybrid": generate_hybrid,
}


def _content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _ints(tokens: Sequence[str], lineno: int) -> List[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise MeshFormatError(f"expected integers, got {' '.join(tokens)!r}", lineno) from None


def load_mesh(text: str) -> Mesh:
    """Parse the line-oriented mesh format.

    Line 1 holds ``nv nc``, then ``nv`` lines ``x y``, ``nc`` lines
    ``k i1 ... ik`` (0-based, counterclockwise) and optional
    ``btag i j TAG`` lines with TAG in DU, DP, NP. ``#`` starts a comment.
    """
    lines = list(_content_lines(text))
    if not lines:
        raise MeshFormatError("empty mesh file")
    lineno, head = lines[0]
    if len(head) != 2:
        raise MeshFormatError("header must be 'nv nc'", lineno)
    nv, nc = _ints(head, lineno)
    if nv < 3 or nc < 1:
        raise MeshFormatError(f"need at least 3 vertices and 1 cell, got {nv} and {nc}", lineno)
    if len(lines) < 1 + nv + nc:
        raise MeshFormatError(f"expected {nv} vertex and {nc} cell lines, file ends early",
                              lines[-1][0])

    vertices = np.empty((nv, 2))
    for v, (lineno, tokens) in enumerate(lines[1:1 + nv]):
        if len(tokens) != 2:
            raise MeshFormatError("vertex line must be 'x y'", lineno)
        try:
            vertices[v] = [float(tokens[0]), float(tokens[1])]
        except ValueError:
            raise MeshFormatError(f"bad coordinates {' '.join(tokens)!r}", lineno) from None

    cells = []
    for lineno, tokens in lines[1 + nv:1 + nv + nc]:
        values = _ints(tokens, lineno)
        k, loop = values[0], values[1:]
        if k != len(loop):
            raise MeshFormatError(f"cell declares {k} vertices but lists {len(loop)}", lineno)
        bad = [i for i in loop if i < 0 or i >= nv]
        if bad:
            raise MeshFormatError(f"vertex index {bad[0]} out of range 0..{nv - 1}", lineno)
        problem = polygon_problem(vertices[loop], loop)
        if problem:
            raise MeshFormatError(problem, lineno)
        cells.append(loop)

    tags: List[Tuple[int, EdgeKey, str]] = []
    for lineno, tokens in lines[1 + nv + nc:]:
        if len(tokens) != 4 or tokens[0] != "btag":
            raise MeshFormatError("expected 'btag i j TAG'", lineno)
        i, j = _ints(tokens[1:3], lineno)
        tag = tokens[3]
        if tag not in BOUNDARY_TAGS:
            raise MeshFormatError(f"unknown boundary tag {tag!r}", lineno)
        tags.append((lineno, (i, j), tag))

    try:
        mesh = Mesh(vertices, cells, family="file")
    except MeshError as exc:
        raise MeshFormatError(str(exc)) from exc

    neumann = []
    for lineno, (i, j), tag in tags:
        e = mesh.edge_index.get(_edge_key(i, j))
        if e is None or not mesh.is_boundary[e]:
            raise MeshFormatError(f"({i}, {j}) is not a boundary edge", lineno)
        if tag == NEUMANN_P:
            neumann.append((i, j))
    if neumann:
        mesh = Mesh(vertices, cells, neumann, family="file")
    logging.debug(f"loaded {mesh!r} with {len(neumann)} Neumann pressure edges")
    return mesh


def dump_mesh(mesh: Mesh) -> str:
    """Canonical mesh-file text; ``load_mesh(dump_mesh(m))`` rebuilds ``m``."""
    out = [f"{len(mesh.vertices)} {mesh.n_cells}"]
    out += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    out += [" ".join(str(int(i)) for i in (len(loop), *loop)) for loop in mesh.cells]
    for e in np.flatnonzero(mesh.neumann):
        i, j = mesh.edges[e]
        out.append(f"btag {i} {j} {NEUMANN_P}")
    return "\n".join(out) + "\n"
