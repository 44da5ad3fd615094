import logging
from pathlib import Path

import click

from cogs.options import input_errors, resolve_config, study_options
from wgbiot.stepper import TimeGrid, prepare_mesh
from wgbiot.problems import make_problem
from wgbiot.study import lambda_tag, level_meshes
from wgbiot.system import assemble, build_discretization


@click.command("dump-system")
@study_options
@input_errors
def dump_system(config_path, **flags):
    """Export the step matrix of the first level and lambda as `i j value` triplets."""
    config = resolve_config(config_path, **flags)
    lam = config.lambdas[0]
    problem = make_problem(config.problem, lam, mu=config.mu, kappa=config.kappa, c0=config.c0,
                           final_time=config.final_time)
    level, mesh = level_meshes(config)[0]
    mesh = prepare_mesh(problem, mesh)
    grid = TimeGrid.from_tau(config.final_time, config.tau_for(mesh.label))
    disc = build_discretization(mesh, config.degree, problem.lam, problem.mu, problem.kappa,
                                problem.c0)
    system = assemble(disc, grid.tau, config.solver)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"system_{mesh.family}_n{level}_j{config.degree}_lam{lambda_tag(lam)}.txt"
    sidecar = system.dump(path)
    logging.info(f"Block sizes written to {sidecar}")
    click.echo(str(path))


def setup(cli):
    cli.add_command(dump_system)
