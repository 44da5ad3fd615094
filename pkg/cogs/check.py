import logging

import click

from wgbiot.checks import run_checks


@click.command("check")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def check(verbose):
    """Run the property gates; exit 1 naming the first failing gate."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    results = run_checks()
    for result in results:
        click.echo(result.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise click.ClickException(f"gate failed: {failed[0]}"
                                   + (f" (and {len(failed) - 1} more)" if len(failed) > 1 else ""))
    click.echo(f"all {len(results)} gates passed")


def setup(cli):
    cli.add_command(check)
