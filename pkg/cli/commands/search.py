"""Subcommand sampling the inner-bound Pareto front."""

import click

from calculation.aux_search import (
    DEFAULT_ITERATIONS, DEFAULT_PENALTY, DEFAULT_RESTARTS, DEFAULT_SCALE,
    SearchConfig, search_inner)
from calculation.model import Var
from cli.commands._shared import emit, model_options, resolve_model
from cli.utils.notifications import handle_errors


def _parse_weights(value):
    # Comma-separated floats, e.g. "1,0,0,0,0,0"
    try:
        return tuple(float(w) for w in value.split(','))
    except ValueError as e:
        raise click.BadParameter(f'not a list of numbers: {value!r}') from e


@click.command()
@model_options
@click.option('--mode', type=click.Choice([str(m) for m in SearchConfig.Mode]),
              default=str(SearchConfig.Mode.LOSSLESS), show_default=True)
@click.option('--restarts', type=click.IntRange(0), default=DEFAULT_RESTARTS,
              show_default=True)
@click.option('--iterations', type=click.IntRange(0),
              default=DEFAULT_ITERATIONS, show_default=True)
@click.option('--scale', type=click.FloatRange(0, min_open=True),
              default=DEFAULT_SCALE, show_default=True)
@click.option('--penalty', type=click.FloatRange(0), default=DEFAULT_PENALTY,
              show_default=True, help='Weight on H(f|U1,U2,Y,Q) (lossless).')
@click.option('--weights', default=None,
              help='Comma-separated weights over r_s..r_l_eve (and d).')
@click.option('--size', 'sizes', multiple=True, nargs=2,
              type=(click.Choice(['Q', 'U1', 'V1', 'U2', 'V2']), int),
              help='Cardinality override, e.g. --size U1 3.')
@click.option('--seed', type=int, required=True)
@click.pass_obj
@handle_errors
# pylint: disable-next=R0913,R0917 # Silence option count errors
def search(cfg, model_path, example, hamming, mode, restarts, iterations,
           scale, penalty, weights, sizes, seed):
    """Search auxiliary systems and print the Pareto front."""

    model = resolve_model(cfg, model_path, example, hamming)
    search_cfg = SearchConfig(
        mode=SearchConfig.Mode(mode),
        sizes={Var(name): size for name, size in sizes} or None,
        restarts=restarts,
        iterations=iterations,
        scale=scale,
        seed=seed,
        weights=_parse_weights(weights) if weights else None,
        penalty=penalty
    )
    front = search_inner(model, search_cfg, cfg.workers, cfg.tol)
    frame = front.to_frame()
    emit(cfg, frame.to_dict(orient='records'), list(frame.columns))
