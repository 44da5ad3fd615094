"""Property gates run by ``main.py check``.

Every gate returns a GateResult; a gate passes when its measured value is at
or below its tolerance.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .basis import monomial_exponents
from .errors import WgBiotError
from .forms import build_all_forms
from .mesh import GENERATORS, Mesh, generate_hybrid, generate_rectangular, generate_triangular
from .problems import manufactured_residual, problem_locking, problem_poly
from .quadrature import cell_rule
from .system import assemble, build_discretization
from .weakops import apply_commutativity_check, build_all, defining_residual
from .weakspace import build_spaces


@dataclass(frozen=True)
class GateResult:
    name: str
    value: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status:4s} {self.name}: {self.value:.3e} <= {self.tolerance:.0e}{extra}"


def polygon_moment(coords: np.ndarray, a: int, b: int) -> float:
    """Exact integral of x^a y^b over a polygon, by Green's theorem on each side."""
    total = 0.0
    for p0, p1 in zip(coords, np.roll(coords, -1, axis=0)):
        x = Polynomial([p0[0], p1[0] - p0[0]])
        y = Polynomial([p0[1], p1[1] - p0[1]])
        integrand = (x ** (a + 1)) * (y ** b) * (p1[1] - p0[1]) / (a + 1)
        antiderivative = integrand.integ()
        total += antiderivative(1.0) - antiderivative(0.0)
    return float(total)


REFERENCE_POLYGONS = {
    "square": np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
    "triangle": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    "pentagon": np.array([[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [1.0, 2.0], [-0.5, 1.0]]),
}


def random_polynomial(rng: np.random.Generator, degree: int, components: int = 1
                      ) -> Tuple[Callable, Callable]:
    """Random polynomial field and its gradient, both vectorized over points.

    Gradients have shape (n, 2) for scalars and (n, 2, 2) for vectors.
    """
    exps = monomial_exponents(degree)
    coeffs = rng.uniform(-1.0, 1.0, size=(components, len(exps)))
    a, b = exps[:, 0], exps[:, 1]

    def values(x):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        mono = x[:, :1] ** a * x[:, 1:] ** b
        out = mono @ coeffs.T
        return out[:, 0] if components == 1 else out

    def gradient(x):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        dx = a * x[:, :1] ** np.maximum(a - 1, 0) * x[:, 1:] ** b
        dy = b * x[:, :1] ** a * x[:, 1:] ** np.maximum(b - 1, 0)
        grad = np.stack([dx @ coeffs.T, dy @ coeffs.T], axis=-1)
        return grad[:, 0, :] if components == 1 else grad

    return values, gradient


def check_meshes(levels: Iterable[int] = (1, 2, 3, 4)) -> GateResult:
    worst = 0.0
    for generate in GENERATORS.values():
        for n in levels:
            mesh = generate(n)
            mesh.audit()
            worst = max(worst, abs(mesh.areas.sum() - 1.0))
    return GateResult("mesh audit and area identity", worst, 1e-12)


def check_quadrature(max_degree: int = 8) -> GateResult:
    worst = 0.0
    for coords in REFERENCE_POLYGONS.values():
        for q in range(max_degree + 1):
            rule = cell_rule(coords, q)
            for a, b in monomial_exponents(q):
                exact = polygon_moment(coords, int(a), int(b))
                approx = rule.integrate(rule.points[:, 0] ** a * rule.points[:, 1] ** b)
                worst = max(worst, abs(approx - exact) / max(1.0, abs(exact)))
    return GateResult("quadrature exactness", worst, 1e-12)


def mixed_meshes() -> List[Mesh]:
    return [generate_triangular(2), generate_rectangular(2), generate_hybrid(2)]


def check_weak_operators(degrees: Iterable[int] = (1, 2)) -> GateResult:
    worst = 0.0
    for j in degrees:
        mesh = generate_hybrid(2)
        _, info = build_spaces(mesh, j)
        for ops in build_all(mesh, info):
            worst = max(worst, defining_residual(ops))
    return GateResult("weak operator defining identities", worst, 1e-11)


def check_commutativity(samples: int = 50, j: int = 1, seed: int = 0) -> GateResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for mesh in mixed_meshes():
        _, info = build_spaces(mesh, j)
        ops_list = build_all(mesh, info)
        for _ in range(samples):
            degree = int(rng.integers(0, j + 4))
            v, grad_v = random_polynomial(rng, degree, components=2)
            q, grad_q = random_polynomial(rng, degree)
            worst = max(worst, apply_commutativity_check(ops_list, v, grad_v, q, grad_q).worst)
    return GateResult("projection commutativity", worst, 1e-10, f"{samples} fields per mesh")


def check_stabilizers(j: int = 1, seed: int = 1) -> GateResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for mesh in mixed_meshes():
        _, info = build_spaces(mesh, j)
        forms = build_all_forms(build_all(mesh, info), 1.0, 1.0, 1.0, 1.0)
        v, _ = random_polynomial(rng, j + 1, components=2)
        q, _ = random_polynomial(rng, j)
        for lf in forms:
            worst = max(worst, np.abs(lf.stab_u @ lf.ops.project_u(v)).max(),
                        np.abs(lf.stab_p @ lf.ops.project_p(q)).max())
    return GateResult("stabilizer consistency", float(worst), 1e-12)


def check_algebra(n: int = 2, j: int = 1) -> GateResult:
    disc = build_discretization(generate_triangular(n), j)
    system = assemble(disc, tau=0.5 / n ** 2)
    np.linalg.cholesky(system.au.toarray())
    k = system.matrix
    asym = abs(k - k.T).max() / abs(k).max()
    return GateResult("step matrix symmetry (A_u Cholesky ok)", float(asym), 1e-12,
                      f"{k.shape[0]} unknowns")


def check_sources(samples: int = 100, seed: int = 2) -> GateResult:
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.05, 0.95, size=(samples, 2))
    times = rng.uniform(0.0, 1.0, size=samples)
    worst = 0.0
    for problem in (problem_poly(), problem_locking(1.0), problem_locking(1e4)):
        worst = max(worst, manufactured_residual(problem, points, times).worst)
    return GateResult("manufactured source residual", worst, 1e-6)


GATES = (
    check_meshes,
    check_quadrature,
    check_weak_operators,
    check_commutativity,
    check_stabilizers,
    check_algebra,
    check_sources,
)


def run_checks(gates: Optional[Sequence[Callable[[], GateResult]]] = None) -> List[GateResult]:
    """Run every gate; a gate that raises is reported as failed with the error as detail."""
    results = []
    for gate in GATES if gates is None else gates:
        try:
            result = gate()
        except (np.linalg.LinAlgError, WgBiotError, ValueError, RuntimeError) as exc:
            result = GateResult(gate.__name__, float("inf"), 0.0, f"{type(exc).__name__}: {exc}")
        level = logging.INFO if result.passed else logging.ERROR
        logging.log(level, result.line())
        results.append(result)
    return results
