import logging

import numpy as np
import pytest

from calculation.binning_sim import (
    BinRates, Layer, LayerRate, SimMode, average_reports, default_rates,
    make_binning, rate_bits, sequence_index, sequence_letters, simulate_exact,
    simulate_mc)
from calculation.errors import Check, PreconditionError
from calculation.model import AuxSystem, Var
from calculation.regions import eval_lemma4


def test_rate_bits():
    assert rate_bits(3, 1 / 3) == 1
    assert rate_bits(3, 2 / 3) == 2
    assert rate_bits(1, 0.0) == 0
    assert rate_bits(4, 0.3) == 2


def test_sequence_indexing():
    letters = sequence_letters(3, 2)
    assert letters.shape == (9, 2)
    np.testing.assert_array_equal(letters[5], [1, 2])
    np.testing.assert_array_equal(sequence_index(letters, 3), np.arange(9))


def test_negative_rates_are_rejected():
    with pytest.raises(PreconditionError) as info:
        LayerRate(w=-0.1)
    assert info.value.check is Check.BAD_ARGUMENT


def test_binning_is_seeded(bernoulli_model):
    rates = BinRates.invertible(0.5, 0.5)
    first = make_binning(4, rates, bernoulli_model, seed=5)
    again = make_binning(4, rates, bernoulli_model, seed=5)
    other = make_binning(4, rates, bernoulli_model, seed=6)
    for layer in (Layer.U1, Layer.U2):
        np.testing.assert_array_equal(
            first.layers[layer].codes, again.layers[layer].codes)
    assert not np.array_equal(
        first.layers[Layer.U1].codes, other.layers[Layer.U1].codes)
    assert first.invertible
    assert first.storage1 == 0.5


def test_zero_rate_is_a_single_bin(bernoulli_model):
    bins = make_binning(3, BinRates.invertible(0, 0), bernoulli_model)
    layer = bins.layers[Layer.U1]
    assert np.all(layer.w(np.arange(8)) == 0)
    np.testing.assert_array_equal(layer.members(0), np.arange(8))


def test_injective_full_rate(bernoulli_model):
    bins = make_binning(1, BinRates.invertible(1, 1), bernoulli_model,
                        injective=True)
    w = bins.layers[Layer.U1].w(np.arange(2))
    assert len(set(w.tolist())) == 2


def test_rate_above_entropy_is_capped(bernoulli_model, caplog):
    with caplog.at_level(logging.WARNING, logger='calculation.binning_sim'):
        bins = make_binning(1, BinRates.invertible(5, 0), bernoulli_model)
    assert 'capped' in caplog.text
    assert bins.storage1 == 1.0
    assert bins.storage2 == 0.0


def test_aux_storage_counts_transmitter_total(rng, bernoulli_model):
    sizes = {Var.Q: 1, Var.U1: 3, Var.V1: 2, Var.U2: 3, Var.V2: 2}
    aux = AuxSystem.random(bernoulli_model, sizes, rng)
    rates = BinRates(**{str(layer): LayerRate(w=0.3) for layer in Layer})
    bins = make_binning(5, rates, bernoulli_model, aux, seed=4)
    assert bins.storage1 == bins.storage2 == pytest.approx(0.6)
    assert bins.layers[Layer.V1].w_bits == bins.layers[Layer.V2].w_bits == 2
    assert bins.layers[Layer.U1].w_bits == bins.layers[Layer.U2].w_bits == 1


def test_aux_storage_matches_rate_without_v_layer(rng, bernoulli_model):
    sizes = {Var.Q: 1, Var.U1: 3, Var.V1: 2, Var.U2: 3, Var.V2: 2}
    aux = AuxSystem.random(bernoulli_model, sizes, rng)
    rates = BinRates(u1=LayerRate(w=0.5), v2=LayerRate(w=0.25))
    bins = make_binning(4, rates, bernoulli_model, aux)
    assert bins.layers[Layer.V1].w_bits == 0
    assert bins.layers[Layer.U1].w_bits == 2
    assert bins.layers[Layer.V2].w_bits == 1
    assert bins.layers[Layer.U2].w_bits == 0
    assert bins.storage1 == 0.5
    assert bins.storage2 == 0.25


def test_exact_single_letter_matches_lemma4(bernoulli_model):
    report = simulate_exact(bernoulli_model, 1, BinRates.invertible(1, 1),
                            injective=True)
    lemma4 = eval_lemma4(bernoulli_model)
    assert report.mode is SimMode.EXACT
    assert report.error_prob == pytest.approx(0.0, abs=1e-12)
    assert report.secrecy_leak == pytest.approx(lemma4.r_s, abs=1e-9)
    assert report.priv_dec == pytest.approx(lemma4.r_l_dec, abs=1e-9)
    assert report.priv_eve == pytest.approx(lemma4.r_l_eve, abs=1e-9)


def test_exact_zero_rate_leaks_nothing(bernoulli_model):
    report = simulate_exact(bernoulli_model, 2, BinRates.invertible(0, 0))
    assert report.secrecy_leak == 0.0
    assert report.priv_dec == 0.0
    assert report.priv_eve == 0.0
    assert report.storage1 == report.storage2 == 0.0
    assert report.error_prob > 0.1


def test_exact_error_falls_with_rate(bernoulli_model):
    errors = []
    for w in (0, 1 / 3, 2 / 3, 1):
        rates = BinRates.invertible(w, w)
        errors.append(average_reports(
            simulate_exact(bernoulli_model, 3, rates, seed)
            for seed in range(10)).error_prob)
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    assert errors[-1] < errors[0]


def test_exact_decoding_with_observed_source(observed_model):
    report = simulate_exact(observed_model, 2, BinRates.invertible(0, 0))
    assert report.error_prob == pytest.approx(0.0, abs=1e-12)


def test_exact_needs_invertible_function(rng, model_factory):
    with pytest.raises(PreconditionError) as info:
        simulate_exact(model_factory(rng, f='xor'), 1,
                       BinRates.invertible(1, 1))
    assert info.value.check is Check.NOT_INVERTIBLE


def test_exact_enumeration_guard(bernoulli_model):
    with pytest.raises(PreconditionError) as info:
        simulate_exact(bernoulli_model, 6, BinRates.invertible(1, 1))
    assert info.value.check is Check.ENUMERATION_GUARD


def test_monte_carlo_agrees_with_exact(bernoulli_model):
    rates = BinRates.invertible(0.5, 0.5)
    exact = simulate_exact(bernoulli_model, 2, rates, seed=0)
    mc = simulate_mc(bernoulli_model, 2, rates, seed=0, trials=4000,
                     confidence=0.999)
    assert mc.mode is SimMode.MONTE_CARLO
    assert mc.ci_low <= exact.error_prob <= mc.ci_high
    assert mc.ci_radius > 0


def test_monte_carlo_is_deterministic(bernoulli_model):
    rates = BinRates.invertible(0.5, 0.25)
    first = simulate_mc(bernoulli_model, 4, rates, seed=2, trials=600)
    again = simulate_mc(bernoulli_model, 4, rates, seed=2, trials=600,
                        n_jobs=2)
    assert first.error_prob == again.error_prob
    assert first.trials == 600


def test_monte_carlo_full_rate_has_no_errors(bernoulli_model):
    report = simulate_mc(bernoulli_model, 4, BinRates.invertible(1, 1),
                         trials=300, injective=True)
    assert report.error_prob == 0.0
    assert report.ci_low == pytest.approx(0.0, abs=1e-12)


def test_monte_carlo_error_falls_with_blocklength(bernoulli_model):
    # Quarter rates keep ceil(n * rate) / n fixed for n = 4, 8, 12
    rates = BinRates.invertible(1.0, 0.75)
    errors = [average_reports(
        simulate_mc(bernoulli_model, n, rates, seed=seed, trials=2000)
        for seed in range(5)).error_prob for n in (4, 8, 12)]
    assert errors[0] > errors[1] > errors[2]


def test_monte_carlo_layered_decoding(bernoulli_model):
    aux = AuxSystem.identity(bernoulli_model)
    rates = default_rates(bernoulli_model, aux)
    report = simulate_mc(bernoulli_model, 2, rates, seed=1, trials=64,
                         aux=aux)
    assert 0.0 <= report.error_prob <= 1.0
    assert report.storage1 == pytest.approx(
        make_binning(2, rates, bernoulli_model, aux, 1).storage1)


def test_monte_carlo_arguments(bernoulli_model):
    rates = BinRates.invertible(0, 0)
    with pytest.raises(PreconditionError):
        simulate_mc(bernoulli_model, 1, rates, trials=0)
    with pytest.raises(PreconditionError):
        simulate_mc(bernoulli_model, 1, rates, confidence=1.0)


def test_default_rates(bernoulli_model):
    small = default_rates(bernoulli_model, epsilon=1e-12)
    assert small.w1 + small.w2 == pytest.approx(0.7686, abs=1e-4)
    plain = default_rates(bernoulli_model)
    layered = default_rates(bernoulli_model, AuxSystem.identity(bernoulli_model))
    assert layered.w1 == pytest.approx(plain.w1, abs=1e-9)
    assert layered.w2 == pytest.approx(plain.w2, abs=1e-9)
    assert layered.v1.f == 0.0
    with pytest.raises(PreconditionError) as info:
        default_rates(bernoulli_model, epsilon=0.0)
    assert info.value.check is Check.BAD_EPSILON


def test_default_rates_vanish_for_observed_source(observed_model):
    rates = default_rates(observed_model, epsilon=1e-6)
    assert rates.w1 == pytest.approx(4e-6, abs=1e-12)
    assert rates.w2 == pytest.approx(4e-6, abs=1e-12)


def test_rates_scale_only_storage():
    rates = BinRates(u1=LayerRate(f=0.5, w=0.2)).scaled(3.0)
    assert rates.u1.f == 0.5
    assert rates.w1 == pytest.approx(0.6)


def test_average_reports(bernoulli_model):
    reports = [simulate_exact(bernoulli_model, 2, BinRates.invertible(0.5, 0.5),
                              seed) for seed in range(3)]
    mean = average_reports(reports)
    assert mean.error_prob == pytest.approx(
        np.mean([r.error_prob for r in reports]), abs=1e-15)
    assert mean.seed is None
    assert mean.as_record()['mode'] == 'exact'
    other = simulate_exact(bernoulli_model, 1, BinRates.invertible(0, 0))
    with pytest.raises(PreconditionError):
        average_reports(reports + [other])
