"""Subcommand evaluating one theorem or lemma bound set."""

import click

from calculation.model import induced_joint
from calculation.regions import (
    RATE_FIELDS, best_lemma2_q, corner_points, eval_inner_lossless,
    eval_inner_lossy, eval_lemma1, eval_lemma2, eval_lemma3, eval_lemma4,
    eval_outer_lossless, eval_outer_lossy)
from cli.commands._shared import (
    aux_option, emit, model_options, resolve_aux, resolve_model)
from cli.utils.notifications import handle_errors

COLUMNS = ['origin', *RATE_FIELDS, 'd']
THEOREMS = ('1-inner', '1-outer', '2-inner', '2-outer')


def _lemma_rows(cfg, model, lemma, aux_spec, wrt, q_search, q_samples, seed):
    match lemma:
        case '1':
            bounds = eval_lemma1(
                model, resolve_aux(cfg, model, aux_spec), wrt, cfg.tol)
        case '2' if q_search:
            _, bounds = best_lemma2_q(model, q_samples, seed, cfg.tol)
        case '2':
            bounds = eval_lemma2(model, tol=cfg.tol)
        case '3':
            bounds = eval_lemma3(model, cfg.tol)
        case '4':
            bounds = eval_lemma4(model, cfg.tol)
    return [bounds.as_record()]


def _theorem_rows(cfg, model, theorem, aux_spec, corners):
    aux = resolve_aux(cfg, model, aux_spec)
    match theorem:
        case '1-inner':
            rows = [eval_inner_lossless(model, aux, cfg.tol).as_record()]
        case '1-outer':
            rows = [eval_outer_lossless(
                induced_joint(model, aux), cfg.tol).as_record()]
        case '2-inner':
            rows = [eval_inner_lossy(model, aux, tol=cfg.tol).as_record()]
        case '2-outer':
            rows = [eval_outer_lossy(
                model, induced_joint(model, aux), tol=cfg.tol).as_record()]

    if corners:
        # Corner rows carry their decoding order in an extra column
        rows = [r | {'corner': None} for r in rows] + [
            c.bounds.as_record() | {'corner': str(c.which)}
            for c in corner_points(model, aux, cfg.tol)]
    return rows


@click.command()
@model_options
@click.option('--lemma', type=click.Choice(['1', '2', '3', '4']),
              default=None, help='Lemma bound set to evaluate.')
@click.option('--theorem', type=click.Choice(THEOREMS), default=None,
              help='Theorem bound set to evaluate. The outer bounds need an '
                   'aux with |Q| = 1; time-shared systems fail their '
                   'Markov chains.')
@aux_option
@click.option('--wrt', type=click.IntRange(1, 2), default=1, show_default=True,
              help='Transmitter the function is partially invertible for.')
@click.option('--q-search', is_flag=True,
              help='Search binary time-sharing channels for Lemma 2.')
@click.option('--q-samples', type=click.IntRange(0), default=64,
              show_default=True, help='Random Q channels for --q-search.')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--corners', is_flag=True,
              help='Also report both corner points (Theorem 1 inner bound).')
@click.pass_obj
@handle_errors
# pylint: disable-next=R0913,R0917 # Silence option count errors
def evaluate(cfg, model_path, example, hamming, lemma, theorem, aux_spec,
             wrt, q_search, q_samples, seed, corners):
    """Evaluate a lemma or theorem bound set as rows of rate bounds."""

    if (lemma is None) == (theorem is None):
        raise click.UsageError('Give exactly one of --lemma or --theorem.')
    if corners and theorem != '1-inner':
        raise click.UsageError('--corners needs --theorem 1-inner.')

    model = resolve_model(cfg, model_path, example, hamming)
    if lemma is not None:
        rows = _lemma_rows(
            cfg, model, lemma, aux_spec, wrt, q_search, q_samples, seed)
    else:
        rows = _theorem_rows(cfg, model, theorem, aux_spec, corners)
    emit(cfg, rows, COLUMNS + (['corner'] if corners else []))
