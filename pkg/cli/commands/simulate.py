"""Subcommand running the finite-blocklength binning simulator."""

import click

from calculation.binning_sim import (
    DEFAULT_CONFIDENCE, DEFAULT_EPSILON, DEFAULT_SEEDS, DEFAULT_TRIALS,
    BinRates, SimMode, average_reports, default_rates, simulate_exact,
    simulate_mc)
from cli.commands._shared import emit, model_options, resolve_model
from cli.utils.files import load_aux
from cli.utils.notifications import handle_errors

COLUMNS = ['n', 'mode', 'seeds', 'error_prob', 'ci_low', 'ci_high',
           'secrecy_leak', 'priv_dec', 'priv_eve', 'storage1', 'storage2',
           'trials', 'w1', 'w2']


def _run(cfg, model, n, rates, seed, opts):
    """One report for blocklength n, averaged over the requested seeds."""

    reports = []
    for s in range(seed, seed + opts['seeds']):
        if opts['mode'] == SimMode.EXACT:
            reports.append(simulate_exact(
                model, n, rates, s, opts['injective'], cfg.tol))
        else:
            reports.append(simulate_mc(
                model, n, rates, s, opts['trials'], opts['aux'],
                opts['injective'], cfg.workers, opts['confidence'], cfg.tol))
    # A single seed keeps its interval bounds
    return reports[0] if len(reports) == 1 else average_reports(reports)


@click.command()
@model_options
@click.option('--mode', type=click.Choice([str(m) for m in SimMode]),
              default=str(SimMode.EXACT), show_default=True)
@click.option('-n', '--blocklength', 'blocklengths', type=click.IntRange(1),
              multiple=True, required=True, help='Blocklength; repeatable.')
@click.option('--rates', nargs=2, type=click.FloatRange(0), default=None,
              metavar='W1 W2', help='W-rates; default scheme rates if omitted.')
@click.option('--epsilon', type=click.FloatRange(0, min_open=True),
              default=DEFAULT_EPSILON, show_default=True)
@click.option('--rate-scale', type=click.FloatRange(0), default=1.0,
              show_default=True, help='Multiply every W-rate.')
@click.option('--aux', 'aux_path', type=click.Path(exists=True, dir_okay=False),
              default=None, help='Auxiliary system file (Monte Carlo only).')
@click.option('--injective', is_flag=True,
              help='One-to-one W maps when the rate covers the sequences.')
@click.option('--trials', type=click.IntRange(1), default=DEFAULT_TRIALS,
              show_default=True)
@click.option('--confidence', type=click.FloatRange(0, 1, min_open=True,
                                                    max_open=True),
              default=DEFAULT_CONFIDENCE, show_default=True)
@click.option('--seeds', type=click.IntRange(1), default=1, show_default=True,
              help=f'Binning seeds to average over (e.g. {DEFAULT_SEEDS}).')
@click.option('--seed', type=int, required=True)
@click.pass_obj
@handle_errors
# pylint: disable-next=R0913,R0917,R0914 # Silence option count errors
def simulate(cfg, model_path, example, hamming, mode, blocklengths, rates,
             epsilon, rate_scale, aux_path, injective, trials, confidence,
             seeds, seed):
    """Simulate random binning and report error and leakage per n."""

    mode = SimMode(mode)
    if aux_path is not None and mode == SimMode.EXACT:
        raise click.UsageError('--aux needs --mode monte_carlo.')

    model = resolve_model(cfg, model_path, example, hamming)
    aux = load_aux(aux_path, cfg.tol) if aux_path else None
    if rates is None:
        bin_rates = default_rates(model, aux, epsilon, cfg.tol)
    elif aux is None:
        bin_rates = BinRates.invertible(*rates)
    else:
        raise click.UsageError('--rates applies to invertible mode only.')
    bin_rates = bin_rates.scaled(rate_scale)

    opts = {'mode': mode, 'seeds': seeds, 'injective': injective,
            'trials': trials, 'aux': aux, 'confidence': confidence}
    rows = []
    for n in blocklengths:
        report = _run(cfg, model, n, bin_rates, seed, opts)
        rows.append(report.as_record() | {
            'seeds': seeds, 'w1': bin_rates.w1, 'w2': bin_rates.w2})
    emit(cfg, rows, COLUMNS)
