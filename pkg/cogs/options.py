import functools
import logging
from pathlib import Path

import click

from wgbiot.config import StudyConfig, default_threads, load_config
from wgbiot.errors import ConfigError, MeshError


def study_options(func):
    """Flags shared by every study command; each one overrides the config file."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
                     help="key = value study file."),
        click.option("--problem", help="poly, locking or steady_linear."),
        click.option("--mesh", help="triangular, rectangular, hybrid or file:<path>."),
        click.option("--levels", help="Comma-separated n (or N_h) values, e.g. 2,4,8,16."),
        click.option("--degree", type=int, help="Polynomial degree j >= 1."),
        click.option("--lambdas", help="Comma-separated Lame lambda values."),
        click.option("--tau", help="h2 (tau = label^2) or fixed:<value>."),
        click.option("--final-time", type=float, help="Final time T."),
        click.option("--mu", type=float, help="Shear modulus."),
        click.option("--kappa", type=float, help="Permeability."),
        click.option("--c0", type=float, help="Storage coefficient."),
        click.option("--solver", type=click.Choice(["direct", "minres"]), help="Linear solver."),
        click.option("--out", help="Output directory."),
        click.option("--threads", type=int, help="Levels solved in parallel (env WG_BIOT_THREADS)."),
        click.option("--verbose", "-v", is_flag=True, default=None,
                     help="Debug logging and one `n t_n residual` line per step on stderr."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_config(config_path=None, **flags) -> StudyConfig:
    """Defaults < WG_BIOT_THREADS < config file < command-line flags."""
    try:
        base = {"threads": default_threads()}
        if config_path is not None:
            config = load_config(config_path, **base)
        else:
            config = StudyConfig.from_mapping(base)
        config = config.merged(**flags)
    except ConfigError as e:
        raise click.UsageError(str(e))
    if config.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    return config


def step_echo(config: StudyConfig):
    """Per-step hook writing `n t_n residual` to stderr when verbose."""
    if not config.verbose:
        return None

    def echo(n, t, residual):
        click.echo(f"{n} {t:.6e} {residual:.3e}", err=True)
    return echo


def input_errors(func):
    """Turn bad input discovered while running into a usage error (exit 2)."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, MeshError) as e:
            raise click.UsageError(str(e))
    return wrapper
