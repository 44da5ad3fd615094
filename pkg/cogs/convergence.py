import logging
from pathlib import Path

import click

from cogs.options import input_errors, resolve_config, step_echo, study_options
from wgbiot.analysis import plot_data, report_csv
from wgbiot.errors import SolverError
from wgbiot.study import lambda_tag, run_study, write_text


class Convergence:
    """Error table and observed orders for one problem over refined meshes."""

    def __init__(self, config):
        self.config = config
        self.out_dir = Path(config.out)

    def stem(self, lam=None) -> str:
        cfg = self.config
        family = "file" if cfg.mesh_path else cfg.mesh
        stem = f"{cfg.problem}_{family}_j{cfg.degree}"
        if lam is not None and len(cfg.lambdas) > 1:
            stem += f"_lam{lambda_tag(lam)}"
        return stem

    def run(self):
        reports = {}
        for lam in self.config.lambdas:
            report = run_study(self.config, lam, on_step=step_echo(self.config))
            text = report_csv(report)
            write_text(self.out_dir, f"{self.stem(lam)}.csv", text)
            click.echo(text, nl=False)
            tag = f"lambda={lambda_tag(lam)}" if len(self.config.lambdas) > 1 else ""
            reports[tag] = report
        write_text(self.out_dir, f"{self.stem()}.dat", plot_data(reports))
        return reports


@click.command("convergence")
@study_options
@input_errors
def convergence(config_path, **flags):
    """Run a convergence study and write its CSV table."""
    config = resolve_config(config_path, **flags)
    try:
        Convergence(config).run()
    except SolverError as e:
        logging.error(f"Convergence study failed: {e}")
        raise click.ClickException(str(e))


def setup(cli):
    cli.add_command(convergence)
