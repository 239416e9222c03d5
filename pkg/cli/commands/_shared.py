"""Shared model and auxiliary-system options for subcommands.

Every subcommand reads its model either from a JSON model file (--model) or
from the builtin multiplicative Bernoulli example (--example-bernoulli B1 B2
ALPHA Q), optionally with a Hamming distortion attached (--hamming).
"""

from dataclasses import replace

import click

from calculation.model import AuxSystem, Distortion, bernoulli_example_model
from cli.utils.files import load_aux, load_model, write_rows
from cli.utils.notifications import written_notification


def model_options(func):
    """Attach the model source options to a subcommand."""

    func = click.option(
        '--hamming', is_flag=True,
        help='Attach Hamming distortion over the function alphabet.')(func)
    func = click.option(
        '--example-bernoulli', 'example', nargs=4, type=float, default=None,
        metavar='B1 B2 ALPHA Q',
        help='Use the builtin multiplicative Bernoulli model.')(func)
    func = click.option(
        '-m', '--model', 'model_path',
        type=click.Path(exists=True, dir_okay=False),
        help='JSON model file.')(func)
    return func

def aux_option(func):
    """Attach the --aux option (identity, constant or a JSON file)."""

    return click.option(
        '--aux', 'aux_spec', default=None, metavar='identity|constant|PATH',
        help='Auxiliary system; identity when omitted.')(func)

def resolve_model(cfg, model_path, example, hamming):
    """Build the model selected by the model source options.

    Args:
        cfg: RunConfig from the command group
        model_path: --model value or None
        example: --example-bernoulli values or None
        hamming: whether to attach Hamming distortion
    Returns:
        SourceModel
    """

    # Exactly one source must be given
    if (model_path is None) == (example is None):
        raise click.UsageError(
            'Give exactly one of --model or --example-bernoulli.')

    if model_path is not None:
        model = load_model(model_path, cfg.tol)
    else:
        model = bernoulli_example_model(*example)

    if hamming:
        model = replace(model, distortion=Distortion.hamming(model.f_alphabet))
    return model

def resolve_aux(cfg, model, aux_spec):
    """Build the auxiliary system named by --aux."""

    match aux_spec:
        case None | 'identity':
            return AuxSystem.identity(model)
        case 'constant':
            return AuxSystem.constant(model)
        case _:
            return load_aux(aux_spec, cfg.tol)


def emit(cfg, records, columns=None):
    """Write rows in the configured format and destination."""

    n_rows = write_rows(records, cfg.output, cfg.fmt, columns)
    if cfg.output is not None:
        written_notification(n_rows, cfg.output)
