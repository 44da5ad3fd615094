import logging

import pytest

from wgbiot import stepper
from wgbiot.analysis import ERROR_NAMES, ratio_summary
from wgbiot.config import StudyConfig
from wgbiot.errors import ConfigError, MeshFormatError, SolverError
from wgbiot.study import (check_targets, lambda_tag, level_meshes, run_locking, run_study,
                          write_text)

TWO_TRIANGLES = "4 2\n0 0\n1 0\n1 1\n0 1\n3 0 1 2\n3 0 2 3\n"
EXPECTED_ORDERS = (3.0, 2.0, 2.0, 1.0)

# Errors at n = 2, 4, 8, 16 with tau = label^2 and T = 1.
TRIANGULAR_REFERENCE = {
    "u_l2": [9.1014E-03, 1.3362E-03, 1.7620E-04, 2.2603E-05],
    "u_V": [7.0190E-02, 2.1489E-02, 5.7772E-03, 1.4845E-03],
    "p_l2": [4.5721E-03, 8.9546E-04, 2.2088E-04, 5.5267E-05],
    "p_W": [1.9844E-02, 7.2165E-03, 3.4149E-03, 1.6864E-03],
}
RECTANGULAR_REFERENCE = {
    "u_l2": [2.1907E-02, 3.3989E-03, 4.5465E-04, 5.6820E-05],
    "u_V": [1.2383E-01, 3.9438E-02, 1.1434E-02, 3.1454E-03],
    "p_l2": [8.3611E-03, 1.8531E-03, 4.7047E-04, 1.1930E-04],
    "p_W": [2.9900E-02, 1.1653E-02, 5.5779E-03, 2.7740E-03],
}


@pytest.fixture
def quick():
    return StudyConfig(levels=(1, 2), tau="fixed:0.25")


def test_generated_levels(quick):
    levels = level_meshes(quick)
    assert [n for n, _ in levels] == [1, 2]
    assert [m.n_cells for _, m in levels] == [2, 8]


def test_file_mesh_is_a_single_level(tmp_path):
    path = tmp_path / "square.mesh"
    path.write_text(TWO_TRIANGLES)
    ((level, mesh),) = level_meshes(StudyConfig(mesh=f"file:{path}"))
    assert level == 0
    assert mesh.n_cells == 2
    assert mesh.family == "file"


def test_missing_mesh_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        level_meshes(StudyConfig(mesh=f"file:{tmp_path / 'none.mesh'}"))


def test_malformed_mesh_file(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text(TWO_TRIANGLES.replace("3 0 2 3", "3 0 2 9"))
    with pytest.raises(MeshFormatError):
        level_meshes(StudyConfig(mesh=f"file:{path}"))


def test_study_report(quick):
    report = run_study(quick)
    assert report.problem == "poly"
    assert report.family == "triangular"
    assert [lv.level for lv in report.levels] == [1, 2]
    assert [lv.steps for lv in report.levels] == [4, 4]
    assert report.levels[1].dofs == 160
    assert all(lv.max_residual <= 1e-10 for lv in report.levels)
    assert all(e >= 0.0 for lv in report.levels for e in lv.errors.as_tuple())


def test_threads_do_not_change_results(quick):
    serial = run_study(quick)
    parallel = run_study(quick.merged(threads=2))
    for a, b in zip(parallel.levels, serial.levels):
        assert a.errors.as_tuple() == pytest.approx(b.errors.as_tuple(), rel=1e-12)


def test_study_on_a_mesh_file(tmp_path):
    path = tmp_path / "square.mesh"
    path.write_text(TWO_TRIANGLES)
    report = run_study(StudyConfig(mesh=f"file:{path}", tau="fixed:0.5"))
    assert report.family == "file"
    assert len(report.levels) == 1


def test_solver_failure_names_the_level(quick, monkeypatch):
    monkeypatch.setattr(stepper, "RESIDUAL_TOL", -1.0)
    with pytest.raises(SolverError) as info:
        run_study(quick)
    assert info.value.level == "1"
    assert str(info.value).startswith("level 1, step 1:")


def test_locking_reports_per_lambda():
    config = StudyConfig(levels=(2,), lambdas=(1.0, 1e4), tau="fixed:0.25", final_time=0.5)
    reports = run_locking(config)
    assert [r.lam for r in reports] == [1.0, 1e4]
    assert all(r.problem == "locking" for r in reports)


@pytest.mark.parametrize("lam, tag", [(1.0, "1"), (1e4, "1e4"), (1e8, "1e8"), (0.5, "5e-1"),
                                      (2.5e4, "2.5e4"), (100.0, "100")])
def test_lambda_tag(lam, tag):
    assert lambda_tag(lam) == tag


def test_write_text_creates_directory(tmp_path):
    path = write_text(tmp_path / "a" / "b", "table.csv", "x\n")
    assert path.read_text() == "x\n"


def _assert_matches(report, reference, tolerance=0.1):
    for name, values in reference.items():
        assert report.errors(name) == pytest.approx(values, rel=tolerance), name


@pytest.mark.slow
def test_triangular_study_reproduces_reference():
    report = run_study(StudyConfig(mesh="triangular"))
    _assert_matches(report, TRIANGULAR_REFERENCE)
    assert check_targets(report, EXPECTED_ORDERS, 0.15) == []


@pytest.mark.slow
def test_rectangular_study_reproduces_reference():
    report = run_study(StudyConfig(mesh="rectangular"))
    _assert_matches(report, RECTANGULAR_REFERENCE)
    assert check_targets(report, EXPECTED_ORDERS, 0.15) == []


@pytest.mark.slow
def test_hybrid_study_orders():
    report = run_study(StudyConfig(mesh="hybrid"))
    assert check_targets(report, EXPECTED_ORDERS, 0.2) == []


@pytest.mark.slow
def test_locking_free_across_lambda():
    config = StudyConfig(problem="locking", levels=(4, 8, 16), lambdas=(1.0, 1e4, 1e8))
    reports = run_locking(config)
    for row in ratio_summary(reports):
        for name in ERROR_NAMES:
            assert row[f"ratio_{name}"] <= 1.5, (row["level"], name)
    for report in reports:
        assert check_targets(report, EXPECTED_ORDERS, 0.2) == [], report.lam


def test_write_text_logs_on_the_root_logger(tmp_path, caplog):
    with caplog.at_level(logging.INFO):
        write_text(tmp_path, "table.csv", "x\n")
    (record,) = [r for r in caplog.records if r.getMessage().startswith("wrote ")]
    assert record.name == "root"
    assert str(tmp_path / "table.csv") in record.getMessage()
