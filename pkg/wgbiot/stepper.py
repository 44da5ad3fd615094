"""Backward-Euler time integration of the fully discrete scheme."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import SolverError
from .mesh import NEUMANN_P, Mesh
from .problems import ProblemSpec
from .system import GlobalSystem, assemble, build_discretization
from .weakspace import WeakFunction, interpolate


RESIDUAL_TOL = 1e-10

StepHook = Callable[[int, float, float], None]


@dataclass(frozen=True)
class TimeGrid:
    final_time: float
    steps: int

    def __post_init__(self):
        if isinstance(self.steps, bool) or not isinstance(self.steps, (int, np.integer)) \
                or self.steps < 1:
            raise ValueError(f"step count must be a positive integer, got {self.steps!r}")
        if not self.final_time > 0.0:
            raise ValueError(f"final time must be positive, got {self.final_time}")

    @classmethod
    def from_tau(cls, final_time: float, tau: float) -> "TimeGrid":
        """Grid with N = max(1, round(T / tau)) steps; the actual step is T / N."""
        if not tau > 0.0:
            raise ValueError(f"time step tau must be positive, got {tau}")
        return cls(float(final_time), max(1, int(round(final_time / tau))))

    @property
    def tau(self) -> float:
        return self.final_time / self.steps

    def time(self, n: int) -> float:
        if n == self.steps:
            return self.final_time
        return self.final_time * n / self.steps


@dataclass(eq=False)
class SimulationState:
    system: GlobalSystem
    grid: TimeGrid
    x: np.ndarray
    step: int = 0
    residuals: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)

    @property
    def time(self) -> float:
        return self.grid.time(self.step)

    @property
    def fields(self) -> Tuple[WeakFunction, WeakFunction]:
        return self.system.dofs.scatter(self.x)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


def prepare_mesh(problem: ProblemSpec, mesh: Mesh) -> Mesh:
    """Give a mesh the pressure boundary tags the problem expects."""
    if problem.pressure_tag == NEUMANN_P and not mesh.neumann.any():
        logging.debug(f"tagging every boundary edge of {mesh!r} as {NEUMANN_P} for {problem.name}")
        return mesh.with_pressure_tags(NEUMANN_P)
    return mesh


def initial_state(system: GlobalSystem, problem: ProblemSpec) -> np.ndarray:
    """Global vector of the projected initial data (Q_h u(0), Q_h p(0))."""
    disc = system.disc
    u0, p0 = interpolate(disc.mesh, disc.info, problem.u, problem.p, 0.0)
    return disc.dofs.gather(u0, p0)


def solve_step(system: GlobalSystem, problem: ProblemSpec, previous: np.ndarray,
               t: float) -> Tuple[np.ndarray, float]:
    rhs = system.rhs(t, problem.f, problem.g, problem.gamma, previous)
    x = system.solve(rhs)
    return x, system.residual(x, rhs)


def advance(system: GlobalSystem, problem: ProblemSpec, grid: TimeGrid, x0: np.ndarray,
            on_step: Optional[StepHook] = None) -> SimulationState:
    """Take grid.steps steps from x0 with an assembled system."""
    if abs(system.tau - grid.tau) > 1e-14 * grid.tau:
        raise ValueError(f"system was assembled for tau={system.tau}, grid has tau={grid.tau}")
    state = SimulationState(system, grid, np.array(x0, dtype=float))
    state.energies.append(system.energy(state.x))
    for n in range(1, grid.steps + 1):
        t = grid.time(n)
        x, residual = solve_step(system, problem, state.x, t)
        if not residual <= RESIDUAL_TOL:
            logging.error(f"step {n} at t={t:.6g}: residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
            raise SolverError(f"linear residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}", step=n)
        state.x = x
        state.step = n
        state.residuals.append(residual)
        state.energies.append(system.energy(x))
        if on_step is not None:
            on_step(n, t, residual)
    return state


def run(problem: ProblemSpec, mesh: Mesh, j: int, grid: TimeGrid, solver: str = "direct",
        on_step: Optional[StepHook] = None,
        initial: Optional[np.ndarray] = None) -> SimulationState:
    """Solve the problem on one mesh from t = 0 to grid.final_time."""
    mesh = prepare_mesh(problem, mesh)
    disc = build_discretization(mesh, j, problem.lam, problem.mu, problem.kappa, problem.c0)
    system = assemble(disc, grid.tau, solver)
    x0 = initial_state(system, problem) if initial is None else initial
    return advance(system, problem, grid, x0, on_step)
