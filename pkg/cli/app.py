"""Parent module for the SecFC command-line interface."""

import logging
from dataclasses import dataclass

import click
from dotenv import load_dotenv

from calculation.prob_core import DEFAULT_TOLERANCES, Tolerances
from cli.commands.classify import classify
from cli.commands.evaluate import evaluate
from cli.commands.search import search
from cli.commands.simulate import simulate
from cli.utils.files import OutputFormats

# Environment variable holding the default worker count
WORKERS_ENV = 'SECFC_WORKERS'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

# Read a local .env before options are parsed so it can set the worker count
load_dotenv()


@dataclass(frozen=True)
class RunConfig:
    """Group-level options shared by every subcommand.

    Attributes:
        tol: Tolerances
        output: output file path, or None for stdout
        fmt: OutputFormats member
        workers: joblib worker count
    """
    tol: Tolerances
    output: str = None
    fmt: OutputFormats = OutputFormats.CSV
    workers: int = 1


@click.group()
@click.option('-v', '--verbose', count=True, help='-v for INFO, -vv for DEBUG.')
@click.option('--tol-num', type=click.FloatRange(0, min_open=True),
              default=DEFAULT_TOLERANCES.num, show_default=True)
@click.option('--tol-norm', type=click.FloatRange(0, min_open=True),
              default=DEFAULT_TOLERANCES.norm, show_default=True)
@click.option('--tol-adm', type=click.FloatRange(0, min_open=True),
              default=DEFAULT_TOLERANCES.adm, show_default=True)
@click.option('-o', '--output', type=click.Path(dir_okay=False), default=None,
              help='Output file; stdout when omitted.')
@click.option('--format', 'fmt', type=click.Choice([str(f) for f in OutputFormats]),
              default=str(OutputFormats.CSV), show_default=True)
@click.option('--workers', type=click.IntRange(1), envvar=WORKERS_ENV,
              default=1, show_default=True)
@click.pass_context
# pylint: disable-next=R0913,R0917 # Silence option count errors
def secfc(ctx, verbose, tol_num, tol_norm, tol_adm, output, fmt, workers):
    """Rate regions for secure and private function computation."""

    logging.basicConfig(
        level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)], format=LOG_FORMAT)
    ctx.obj = RunConfig(
        tol=Tolerances(num=tol_num, norm=tol_norm, adm=tol_adm),
        output=output,
        fmt=OutputFormats(fmt),
        workers=workers
    )


secfc.add_command(classify)
secfc.add_command(evaluate)
secfc.add_command(search)
secfc.add_command(simulate)
