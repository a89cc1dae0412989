""" Command line interface: one subcommand per experiment

Exit status is 0 on PASS, 1 on FAIL and 2 when a module raises.
"""
import logging
import sys

import click

from .config import EXPERIMENTS, load_config
from .exceptions import DqtrajError
from .experiments import run
from .output import STATUS_PASS
from .util import parse_seed


EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


class SeedType(click.ParamType):
    """ Unsigned 64 bit seed in base 10 """
    name = 'u64'

    def convert(self, value, param, ctx):
        try:
            return parse_seed(value)
        except (ValueError, TypeError) as ex:
            self.fail(str(ex), param, ctx)


def _configure_logging(verbose, quiet):
    level = logging.INFO
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)s %(module)s: %(message)s',
    )


def _execute(experiment, config_path, seed, out, threads):
    try:
        config = load_config(config_path)
        status, artifacts = run(config, experiment, seed=seed, out=out,
                                threads=threads)
    except DqtrajError as ex:
        click.echo('error: %s' % ex, err=True)
        sys.exit(EXIT_ERROR)
    for artifact in artifacts:
        click.echo(artifact)
    click.echo(status)
    sys.exit(EXIT_PASS if status == STATUS_PASS else EXIT_FAIL)


def common_options(func):
    """ ``--config --seed --out --threads`` for every subcommand """
    options = [
        click.option('--config', 'config_path', required=True,
                     type=click.Path(exists=True, dir_okay=False),
                     help='YAML experiment config'),
        click.option('--seed', type=SeedType(), default=None,
                     help='Master seed; overrides the config'),
        click.option('--out', type=click.Path(file_okay=False), default=None,
                     help='Output directory; overrides the config'),
        click.option('--threads', type=click.IntRange(min=1), default=None,
                     envvar='DQTRAJ_THREADS',
                     help='Worker pool size (env DQTRAJ_THREADS)'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.option('-v', '--verbose', is_flag=True, help='Debug logging')
@click.option('-q', '--quiet', is_flag=True, help='Warnings and errors only')
def main(verbose, quiet):
    """ Disordered quantum trajectories: simulation and ergodic checks """
    _configure_logging(verbose, quiet)


@main.command('run')
@common_options
def run_command(config_path, seed, out, threads):
    """ Run the experiment named in the config """
    _execute(None, config_path, seed, out, threads)


def _experiment_command(name):
    @common_options
    def command(config_path, seed, out, threads):
        _execute(name, config_path, seed, out, threads)
    command.__doc__ = "Run the %s experiment" % name
    return main.command(name)(command)


for _name in EXPERIMENTS:
    _experiment_command(_name)
