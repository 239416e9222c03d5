"""Subcommand reporting the function class, degradedness and usable lemmas."""

import click

from calculation.model import (
    FunctionClass, check_degradedness, classify_function, function_residuals)
from cli.commands._shared import emit, model_options, resolve_model
from cli.utils.notifications import handle_errors


def applicable_lemmas(function_class, degradedness):
    """Lemmas whose preconditions hold.

    Args:
        function_class: FunctionClass of the target function
        degradedness: DegradednessReport of the model
    Returns:
        list of lemma labels such as 'lemma1_wrt_1'
    """

    lemmas = [f'lemma1_wrt_{wrt}' for wrt in (1, 2)
              if function_class.partially_invertible(wrt)]
    if function_class is FunctionClass.INVERTIBLE:
        lemmas.append('lemma2')
        if degradedness.eve_degraded:
            lemmas.append('lemma3')
        if degradedness.fusion_degraded:
            lemmas.append('lemma4')
    return lemmas


@click.command()
@model_options
@click.pass_obj
@handle_errors
def classify(cfg, model_path, example, hamming):
    """Classify the target function and the measurement channel."""

    model = resolve_model(cfg, model_path, example, hamming)
    function_class = classify_function(model, cfg.tol)
    degradedness = check_degradedness(model, cfg.tol)

    record = {
        'function_class': str(function_class),
        'eve_degraded': degradedness.eve_degraded,
        'fusion_degraded': degradedness.fusion_degraded,
        'residual_eve': degradedness.residual_eve,
        'residual_fusion': degradedness.residual_fusion,
    } | function_residuals(model, cfg.tol) | {
        'lemmas': ' '.join(applicable_lemmas(function_class, degradedness)),
    }
    emit(cfg, [record])
