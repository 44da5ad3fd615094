import math

import numpy as np
import pytest

from wgbiot.analysis import (CSV_HEADER, ERROR_NAMES, ErrorQuad, LevelResult, StudyReport,
                             convergence_orders, measure_errors, parse_report_csv, plot_data,
                             ratio_csv, ratio_summary, report_csv)
from wgbiot.mesh import generate_hybrid, generate_rectangular, generate_triangular
from wgbiot.problems import problem_poly
from wgbiot.stepper import SimulationState, TimeGrid, run
from wgbiot.system import assemble, build_discretization
from wgbiot.weakspace import interpolate

TABLE_V_ERRORS = [7.0190E-02, 2.1489E-02, 5.7772E-03, 1.4845E-03, 3.7534E-04, 9.4302E-05]
TABLE_V_ORDERS = [1.7077, 1.8952, 1.9604, 1.9837, 1.9928]


def _solve(problem, mesh, j=1):
    grid = TimeGrid.from_tau(problem.final_time, mesh.label ** 2)
    state = run(problem, mesh, j, grid)
    return state, measure_errors(state, problem)


def _report(errors, labels=None, lam=1.0):
    labels = labels or [math.sqrt(2.0) / 2 ** (k + 1) for k in range(len(errors))]
    levels = [LevelResult(2 ** (k + 1), h, 100 * (k + 1), ErrorQuad(*e))
              for k, (h, e) in enumerate(zip(labels, errors))]
    return StudyReport("poly", "triangular", 1, lam, levels)


def test_order_of_halved_mesh():
    assert convergence_orders([1.0, 0.5], [4.0, 1.0]) == [None, pytest.approx(2.0)]


def test_synthetic_cubic_orders():
    labels = [2.0 ** -k for k in range(1, 6)]
    orders = convergence_orders(labels, [7.0 * h ** 3 for h in labels])
    assert orders[0] is None
    assert orders[1:] == pytest.approx([3.0] * 4, abs=1e-12)


def test_orders_of_reference_table():
    labels = [math.sqrt(2.0) / 2 ** k for k in range(1, 7)]
    orders = convergence_orders(labels, TABLE_V_ERRORS)
    assert orders[1:] == pytest.approx(TABLE_V_ORDERS, abs=1e-3)


def test_zero_error_has_no_order():
    assert convergence_orders([0.5, 0.25, 0.125], [1.0, 0.0, 0.0]) == [None, None, None]


def test_orders_need_matching_lengths():
    with pytest.raises(ValueError):
        convergence_orders([1.0, 0.5], [1.0])


def test_interpolant_has_zero_error(tri2):
    problem = problem_poly()
    disc = build_discretization(tri2, 1)
    system = assemble(disc, 0.25)
    grid = TimeGrid(1.0, 4)
    u, p = interpolate(tri2, disc.info, problem.u, problem.p, 1.0)
    state = SimulationState(system, grid, disc.dofs.gather(u, p), step=grid.steps)
    assert measure_errors(state, problem).as_tuple() == (0.0, 0.0, 0.0, 0.0)


def test_errors_do_not_depend_on_cell_order():
    problem = problem_poly()
    mesh = generate_hybrid(2)
    order = np.random.default_rng(4).permutation(mesh.n_cells)
    grid = TimeGrid(1.0, 4)
    first = measure_errors(run(problem, mesh, 1, grid), problem)
    second = measure_errors(run(problem, mesh.reorder(order), 1, grid), problem)
    assert second.as_tuple() == pytest.approx(first.as_tuple(), rel=1e-9)


def test_triangular_energy_error_matches_reference():
    _, errors = _solve(problem_poly(), generate_triangular(4))
    assert errors.u_V == pytest.approx(2.1489E-02, rel=0.1)


def test_triangular_fine_level_matches_reference():
    _, errors = _solve(problem_poly(), generate_triangular(8))
    assert errors.u_l2 == pytest.approx(1.7620E-04, rel=0.1)
    assert errors.p_l2 == pytest.approx(2.2088E-04, rel=0.1)


def test_rectangular_pressure_error_matches_reference():
    _, errors = _solve(problem_poly(), generate_rectangular(8))
    assert errors.p_W == pytest.approx(5.5779E-03, rel=0.1)


def test_report_csv_layout():
    report = _report([(4e-2, 1e-1, 3e-2, 2e-1), (5e-3, 2.5e-2, 7.5e-3, 1e-1)])
    text = report_csv(report)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "2,7.071E-01,100,4.000E-02,-,1.000E-01,-,3.000E-02,-,2.000E-01,-"
    rows = parse_report_csv(text)
    assert len(rows) == 2
    assert rows[1]["ord_u_l2"] == "3.0000"
    assert rows[1]["ord_p_W"] == "1.0000"
    assert float(rows[1]["err_p_l2"]) == 7.5e-3


def test_parse_rejects_other_tables():
    with pytest.raises(ValueError):
        parse_report_csv("a,b\n1,2\n")


def test_finest_orders():
    report = _report([(8.0, 4.0, 4.0, 2.0), (1.0, 1.0, 1.0, 1.0)])
    assert report.finest_orders() == pytest.approx({"u_l2": 3.0, "u_V": 2.0, "p_l2": 2.0,
                                                    "p_W": 1.0})


def test_ratio_summary():
    a = _report([(1.0, 2.0, 3.0, 4.0)], lam=1.0)
    b = _report([(2.0, 2.0, 3.0, 8.0)], lam=1e4)
    (row,) = ratio_summary([a, b])
    assert [row[f"ratio_{name}"] for name in ERROR_NAMES] == [2.0, 1.0, 1.0, 2.0]
    assert ratio_csv([a, b]).splitlines()[1].endswith("2.0000,1.0000,1.0000,2.0000")
    with pytest.raises(ValueError):
        ratio_summary([a, _report([(1.0,) * 4, (1.0,) * 4])])


def test_plot_data_blocks():
    report = _report([(1.0, 2.0, 3.0, 4.0), (0.5, 1.0, 1.5, 2.0)])
    text = plot_data({"lambda=1": report})
    lines = text.splitlines()
    assert lines[0] == "# lambda=1 err_u_l2"
    assert lines[1] == "7.071E-01 1.000E+00"
    assert "# lambda=1 err_p_W" in lines
    assert plot_data({"": report}).startswith("# err_u_l2\n")
