import logging
from pathlib import Path

import click

from cogs.options import input_errors, resolve_config, step_echo, study_options
from wgbiot.analysis import ERROR_NAMES, plot_data, ratio_csv, ratio_summary, report_csv
from wgbiot.errors import SolverError
from wgbiot.study import lambda_tag, run_locking, write_text

# Largest spread of an error across lambda still counted as locking-free.
RATIO_LIMIT = 1.5


class Locking:
    def __init__(self, config):
        self.config = config
        self.out_dir = Path(config.out)
        self.family = "file" if config.mesh_path else config.mesh

    def run(self):
        reports = run_locking(self.config, on_step=step_echo(self.config))
        for report in reports:
            name = f"locking_{self.family}_j{self.config.degree}_lam{lambda_tag(report.lam)}.csv"
            write_text(self.out_dir, name, report_csv(report))
        summary = ratio_csv(reports)
        write_text(self.out_dir, f"locking_{self.family}_j{self.config.degree}_ratios.csv", summary)
        write_text(self.out_dir, f"locking_{self.family}_j{self.config.degree}.dat",
                   plot_data({f"lambda={lambda_tag(r.lam)}": r for r in reports}))
        click.echo(summary, nl=False)
        return reports

    @staticmethod
    def worst_ratio(reports):
        rows = ratio_summary(reports)
        return max((row[f"ratio_{name}"] for row in rows for name in ERROR_NAMES), default=1.0)


@click.command("locking")
@study_options
@click.option("--strict", is_flag=True,
              help=f"Exit 1 when an error varies by more than {RATIO_LIMIT}x across lambda.")
@input_errors
def locking(config_path, strict, **flags):
    """Run the locking problem for every lambda and compare the error curves."""
    flags["problem"] = "locking"
    config = resolve_config(config_path, **flags)
    try:
        reports = Locking(config).run()
    except SolverError as e:
        logging.error(f"Locking study failed: {e}")
        raise click.ClickException(str(e))
    ratio = Locking.worst_ratio(reports)
    if ratio > RATIO_LIMIT:
        logging.warning(f"Errors vary by {ratio:.3f}x across lambda (limit {RATIO_LIMIT}x)")
        if strict:
            raise click.ClickException(f"locking gate failed: max ratio {ratio:.3f} > {RATIO_LIMIT}")
    else:
        logging.info(f"Errors vary by at most {ratio:.3f}x across lambda")


def setup(cli):
    cli.add_command(locking)
