"""Multi-level convergence and locking studies."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import timedelta
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import humanize

from .analysis import LevelResult, StudyReport, measure_errors
from .config import StudyConfig
from .errors import ConfigError, SolverError
from .mesh import GENERATORS, Mesh, load_mesh
from .problems import ProblemSpec, make_problem
from .stepper import StepHook, TimeGrid, run


def level_meshes(config: StudyConfig) -> List[Tuple[int, Mesh]]:
    """(level, mesh) pairs of a study; a mesh file is a single level 0."""
    path = config.mesh_path
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"mesh: cannot read {path}: {exc.strerror}") from exc
        mesh = load_mesh(text)
        mesh.audit()
        return [(0, mesh)]
    generate = GENERATORS[config.mesh]
    return [(n, generate(n)) for n in config.levels]


def solve_level(problem: ProblemSpec, level: int, mesh: Mesh, config: StudyConfig,
                on_step: Optional[StepHook] = None) -> LevelResult:
    grid = TimeGrid.from_tau(problem.final_time, config.tau_for(mesh.label))
    start = time.perf_counter()
    try:
        state = run(problem, mesh, config.degree, grid, config.solver, on_step)
    except SolverError as exc:
        if exc.level is None:
            raise SolverError(exc.detail, step=exc.step, level=str(level)) from exc
        raise
    errors = measure_errors(state, problem)
    elapsed = time.perf_counter() - start
    dofs = state.system.dofs.total
    took = humanize.precisedelta(timedelta(seconds=elapsed), minimum_unit="milliseconds")
    logging.info(f"{problem.name} {mesh.family} level {level}: {humanize.intcomma(dofs)} DOFs, "
                 f"{grid.steps} steps, {took}")
    return LevelResult(level, mesh.label, dofs, errors, grid.steps, elapsed, state.max_residual)


def run_study(config: StudyConfig, lam: Optional[float] = None, problem: Optional[str] = None,
              on_step: Optional[StepHook] = None) -> StudyReport:
    """Run every level of a study; levels run on ``config.threads`` workers."""
    lam = config.lambdas[0] if lam is None else lam
    spec = make_problem(problem or config.problem, lam, mu=config.mu, kappa=config.kappa,
                        c0=config.c0, final_time=config.final_time)
    meshes = level_meshes(config)
    logging.info(f"study {spec.name} on {config.mesh} meshes, j={config.degree}, lambda={lam:g}: "
                 f"{len(meshes)} level(s)")
    workers = min(config.threads, len(meshes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(solve_level, spec, n, mesh, config, on_step)
                       for n, mesh in meshes]
            results = [f.result() for f in futures]
    else:
        results = [solve_level(spec, n, mesh, config, on_step) for n, mesh in meshes]
    family = meshes[0][1].family
    return StudyReport(spec.name, family, config.degree, float(lam), results)


def run_locking(config: StudyConfig, on_step: Optional[StepHook] = None) -> List[StudyReport]:
    """One locking-problem report per lambda of the configuration."""
    return [run_study(config, lam, problem="locking", on_step=on_step) for lam in config.lambdas]


def lambda_tag(lam: float) -> str:
    """Short file-name friendly form of a lambda value, e.g. 1, 1e4, 1e8."""
    if lam == int(lam) and abs(lam) < 1000:
        return str(int(lam))
    mantissa, exponent = f"{lam:e}".split("e")
    mantissa = mantissa.rstrip("0").rstrip(".")
    return f"{mantissa}e{int(exponent)}"


def write_text(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    logging.info(f"wrote {path}")
    return path


def check_targets(report: StudyReport, expected: Sequence[float], tolerance: float):
    """Names of errors whose finest-pair order misses its expected value."""
    misses = []
    for (name, order), target in zip(report.finest_orders().items(), expected):
        if order is None or abs(order - target) > tolerance:
            misses.append(name)
    return misses
