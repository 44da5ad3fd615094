from dataclasses import replace

import numpy as np
import pytest

from wgbiot import stepper
from wgbiot.errors import SolverError
from wgbiot.mesh import NEUMANN_P, generate_hybrid, generate_triangular
from wgbiot.problems import problem_locking, problem_poly, steady_linear
from wgbiot.stepper import TimeGrid, advance, initial_state, prepare_mesh, run, solve_step
from wgbiot.system import assemble, build_discretization
from wgbiot.weakspace import interpolate


def _unloaded(problem):
    return replace(problem, f=lambda x, t: np.zeros((len(x), 2)),
                   g=lambda x, t: np.zeros(len(x)), gamma=None)


def test_time_grid():
    grid = TimeGrid(1.0, 8)
    assert grid.tau == 0.125
    assert grid.time(0) == 0.0
    assert grid.time(8) == 1.0
    assert TimeGrid(0.7, 3).time(3) == 0.7


@pytest.mark.parametrize("tau, steps", [(1.0 / 8, 8), (0.3, 3), (5.0, 1), (1.0 / 32, 32)])
def test_grid_from_tau(tau, steps):
    assert TimeGrid.from_tau(1.0, tau).steps == steps


@pytest.mark.parametrize("final_time, steps", [(1.0, 0), (1.0, 2.5), (0.0, 4), (-1.0, 4)])
def test_grid_rejects_bad_values(final_time, steps):
    with pytest.raises(ValueError):
        TimeGrid(final_time, steps)


def test_grid_rejects_bad_tau():
    with pytest.raises(ValueError):
        TimeGrid.from_tau(1.0, 0.0)


def test_prepare_mesh_tags_neumann_problems(tri2):
    assert prepare_mesh(problem_poly(), tri2) is tri2
    tagged = prepare_mesh(steady_linear(), tri2)
    assert tagged.neumann.sum() == tri2.is_boundary.sum()
    mixed = tri2.with_pressure_tags(NEUMANN_P)
    assert prepare_mesh(steady_linear(), mixed) is mixed


@pytest.mark.parametrize("mesh", [generate_triangular(2), generate_hybrid(2)],
                         ids=["triangular", "hybrid"])
@pytest.mark.parametrize("j", [1, 2])
def test_steady_linear_is_reproduced(mesh, j):
    problem = steady_linear()
    state = run(problem, mesh, j, TimeGrid(1.0, 3))
    disc = state.system.disc
    u_exact, p_exact = interpolate(disc.mesh, disc.info, problem.u, problem.p, 1.0)
    u_h, p_h = state.fields
    assert np.abs(u_h.interior - u_exact.interior).max() < 1e-9
    assert np.abs(u_h.trace - u_exact.trace).max() < 1e-9
    assert np.abs(p_h.interior - p_exact.interior).max() < 1e-9
    assert np.abs(p_h.trace - p_exact.trace).max() < 1e-9


def test_single_step_run_matches_solve_step(tri2):
    problem = problem_poly()
    grid = TimeGrid(0.25, 1)
    state = run(problem, tri2, 1, grid)
    system = assemble(build_discretization(tri2, 1), grid.tau)
    x, residual = solve_step(system, problem, initial_state(system, problem), 0.25)
    assert state.x == pytest.approx(x, abs=1e-13)
    assert state.step == 1
    assert state.time == 0.25
    assert state.residuals == [pytest.approx(residual, abs=1e-14)]


def test_runs_are_deterministic(hybrid2):
    problem = problem_locking(1e4)
    grid = TimeGrid(0.5, 4)
    first = run(problem, hybrid2, 1, grid)
    second = run(problem, hybrid2, 1, grid)
    assert np.array_equal(first.x, second.x)
    assert first.residuals == second.residuals


def test_step_hook_sees_every_step(tri2):
    seen = []
    state = run(problem_poly(), tri2, 1, TimeGrid(1.0, 4), on_step=lambda *a: seen.append(a))
    assert [n for n, _, _ in seen] == [1, 2, 3, 4]
    assert seen[-1][1] == 1.0
    assert max(r for _, _, r in seen) == state.max_residual <= stepper.RESIDUAL_TOL


def test_unloaded_energy_never_grows(hybrid2):
    problem = _unloaded(problem_poly())
    disc = build_discretization(hybrid2, 1)
    system = assemble(disc, 0.02)
    x0 = np.random.default_rng(2).normal(size=disc.dofs.total)
    state = advance(system, problem, TimeGrid(1.0, 50), x0)
    energies = np.array(state.energies)
    assert len(energies) == 51
    assert np.all(np.diff(energies) <= 1e-12 * energies[0])
    assert energies[-1] < energies[0]


def test_zero_data_keeps_zero_state(tri2):
    problem = _unloaded(problem_poly())
    disc = build_discretization(tri2, 1)
    system = assemble(disc, 0.25)
    state = advance(system, problem, TimeGrid(1.0, 4), np.zeros(disc.dofs.total))
    assert not state.x.any()


def test_residual_failure_names_the_step(tri2, monkeypatch):
    monkeypatch.setattr(stepper, "RESIDUAL_TOL", -1.0)
    with pytest.raises(SolverError) as info:
        run(problem_poly(), tri2, 1, TimeGrid(1.0, 2))
    assert info.value.step == 1
    assert str(info.value).startswith("step 1:")


def test_advance_checks_time_step(tri2_disc):
    system = assemble(tri2_disc, 0.1)
    with pytest.raises(ValueError):
        advance(system, problem_poly(), TimeGrid(1.0, 4), np.zeros(tri2_disc.dofs.total))
