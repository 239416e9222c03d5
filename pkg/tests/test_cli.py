import io
import textwrap

import numpy as np
import orjson
import pandas as pd
import pytest
from click.testing import CliRunner

from calculation.model import AuxSystem
from cli.app import secfc
from cli.utils.files import load_aux, load_model, save_aux, save_model
from cli.utils.notifications import ExitCodes

EXAMPLE = ['--example-bernoulli', '0.2', '0.11', '0.3', '0.25']


@pytest.fixture
def runner():
    return CliRunner()


def rows(result):
    return pd.read_csv(io.StringIO(result.stdout), comment='#')


def test_lemma4_rows(runner, bernoulli_lemma4):
    result = runner.invoke(secfc, ['evaluate', *EXAMPLE, '--lemma', '4'])
    assert result.exit_code == ExitCodes.OK, result.output
    assert result.stdout.startswith('# schema_version=1\n')
    row = rows(result).iloc[0]
    assert row['origin'] == 'lemma4'
    for name, expected in bernoulli_lemma4.items():
        assert row[name] == pytest.approx(expected, abs=5e-5)
    assert np.isnan(row['d'])


def test_failed_precondition_exit_code(runner):
    result = runner.invoke(secfc, ['evaluate', *EXAMPLE, '--lemma', '3'])
    assert result.exit_code == ExitCodes.PRECONDITION
    assert 'not eve-degraded' in result.stderr
    assert result.stdout == ''


def test_evaluate_needs_one_bound_set(runner):
    result = runner.invoke(
        secfc, ['evaluate', *EXAMPLE, '--lemma', '4', '--theorem', '1-inner'])
    assert result.exit_code != ExitCodes.OK
    assert 'exactly one' in result.output


def test_classify(runner):
    result = runner.invoke(secfc, ['classify', *EXAMPLE])
    assert result.exit_code == ExitCodes.OK, result.output
    row = rows(result).iloc[0]
    assert row['function_class'] == 'invertible'
    assert bool(row['fusion_degraded'])
    assert not bool(row['eve_degraded'])
    assert row['lemmas'].split() == [
        'lemma1_wrt_1', 'lemma1_wrt_2', 'lemma2', 'lemma4']


def test_theorem_with_aux_file(runner, tmp_path, bernoulli_model,
                               bernoulli_lemma4):
    aux_path = tmp_path / 'aux.json'
    save_aux(AuxSystem.identity(bernoulli_model), aux_path)
    result = runner.invoke(secfc, [
        'evaluate', *EXAMPLE, '--theorem', '1-inner', '--aux', str(aux_path),
        '--corners'])
    assert result.exit_code == ExitCodes.OK, result.output
    table = rows(result)
    assert list(table['corner'].fillna('')) == ['', 'order_12', 'order_21']
    assert table['r_s'].iloc[0] == pytest.approx(
        bernoulli_lemma4['r_s'], abs=5e-5)


def test_inadmissible_aux(runner):
    result = runner.invoke(secfc, [
        'evaluate', *EXAMPLE, '--theorem', '1-inner', '--aux', 'constant'])
    assert result.exit_code == ExitCodes.PRECONDITION
    assert 'not admissible' in result.stderr


def test_outer_bound_rejects_time_shared_aux(runner, tmp_path):
    # Branches relabel X1 differently, so Q tells X1 apart given U1
    aux = AuxSystem(
        weights=[0.5, 0.5],
        u1=np.stack([np.eye(2), np.eye(2)[::-1]]),
        v1=np.ones((2, 2, 1)),
        u2=np.stack([np.eye(2), np.eye(2)]),
        v2=np.ones((2, 2, 1)))
    aux_path = tmp_path / 'aux.json'
    save_aux(aux, aux_path)
    result = runner.invoke(secfc, [
        'evaluate', *EXAMPLE, '--theorem', '1-outer', '--aux', str(aux_path)])
    assert result.exit_code == ExitCodes.PRECONDITION
    assert 'Markov' in result.stderr


def test_lossy_theorem(runner):
    result = runner.invoke(secfc, [
        'evaluate', *EXAMPLE, '--hamming', '--theorem', '2-inner'])
    assert result.exit_code == ExitCodes.OK, result.output
    assert rows(result)['d'].iloc[0] == 0.0


def test_model_file_round_trip(tmp_path, bernoulli_model):
    path = tmp_path / 'model.json'
    save_model(bernoulli_model, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.p_x.mass, bernoulli_model.p_x.mass)
    np.testing.assert_array_equal(loaded.ch_yz.kernel,
                                  bernoulli_model.ch_yz.kernel)
    np.testing.assert_array_equal(loaded.f_table, bernoulli_model.f_table)
    assert loaded.f_alphabet == bernoulli_model.f_alphabet


def test_aux_file_round_trip(tmp_path, rng, bernoulli_model):
    aux = AuxSystem.random(
        bernoulli_model, {'Q': 2, 'U1': 3, 'V1': 2, 'U2': 3, 'V2': 2}, rng)
    save_aux(aux, tmp_path / 'aux.json')
    assert load_aux(tmp_path / 'aux.json').fingerprint() == aux.fingerprint()


def test_bad_channel_row_reports_line(runner, tmp_path):
    path = tmp_path / 'model.json'
    path.write_text(textwrap.dedent('''\
        {
          "alphabets": {"X": ["0", "1"], "X1": ["0", "1"], "X2": ["0", "1"],
                        "Y": ["0"], "Z": ["0"], "F": ["00", "01", "10", "11"]},
          "p_x": [0.5, 0.5],
          "ch1": [[1.0, 0.0], [0.5, 0.4]],
          "ch2": [[1.0, 0.0], [0.0, 1.0]],
          "ch_yz": [[[1.0]], [[1.0]]],
          "f": [[["00"], ["01"]], [["10"], ["11"]]]
        }
    '''))
    result = runner.invoke(secfc, ['classify', '--model', str(path)])
    assert result.exit_code == ExitCodes.FILE_ERROR
    assert f'{path}:5: ch1' in result.stderr
    assert '(1,)' in result.stderr


def test_invalid_json_reports_line(runner, tmp_path):
    path = tmp_path / 'model.json'
    path.write_text('{\n  "p_x": [0.5, 0.5],\n  oops\n}\n')
    result = runner.invoke(secfc, ['classify', '--model', str(path)])
    assert result.exit_code == ExitCodes.FILE_ERROR
    assert f'{path}:3:' in result.stderr


def test_simulate_exact(runner):
    result = runner.invoke(secfc, [
        'simulate', *EXAMPLE, '-n', '1', '-n', '2', '--rates', '1', '1',
        '--injective', '--seed', '0'])
    assert result.exit_code == ExitCodes.OK, result.output
    table = rows(result)
    assert list(table['n']) == [1, 2]
    assert table['secrecy_leak'].iloc[0] == pytest.approx(0.7579, abs=5e-5)
    assert table['error_prob'].iloc[0] == pytest.approx(0.0, abs=1e-12)


def test_simulate_monte_carlo_seeds(runner):
    result = runner.invoke(secfc, [
        'simulate', *EXAMPLE, '--mode', 'monte_carlo', '-n', '2',
        '--trials', '50', '--seeds', '2', '--seed', '4'])
    assert result.exit_code == ExitCodes.OK, result.output
    row = rows(result).iloc[0]
    assert row['trials'] == 100
    assert row['seeds'] == 2
    assert np.isnan(row['ci_low'])


def test_search_constant_function(runner, tmp_path, rng, model_factory):
    path = tmp_path / 'model.json'
    save_model(model_factory(rng, f='constant'), path)
    result = runner.invoke(secfc, [
        'search', '--model', str(path), '--restarts', '1', '--iterations',
        '5', '--seed', '0'])
    assert result.exit_code == ExitCodes.OK, result.output
    table = rows(result)
    assert len(table) == 1
    assert table[['r_s', 'r_w1', 'r_w2']].to_numpy().max() <= 1e-9


def test_search_lossy_json(runner):
    result = runner.invoke(secfc, [
        '--format', 'json', 'search', *EXAMPLE, '--hamming', '--mode', 'lossy',
        '--weights', '0,0,0,0,0,0,1', '--restarts', '1', '--iterations', '5',
        '--seed', '1'])
    assert result.exit_code == ExitCodes.OK, result.output
    payload = orjson.loads(result.stdout)
    assert payload['schema_version'] == 1
    assert min(r['d'] for r in payload['rows']) == 0.0


def test_search_rejects_bad_weights(runner):
    result = runner.invoke(secfc, [
        'search', *EXAMPLE, '--weights', '1,2', '--seed', '0'])
    assert result.exit_code == ExitCodes.PRECONDITION


def test_output_file(runner, tmp_path):
    out = tmp_path / 'rows.csv'
    result = runner.invoke(secfc, [
        '-o', str(out), 'evaluate', *EXAMPLE, '--lemma', '2', '--q-search',
        '--q-samples', '4'])
    assert result.exit_code == ExitCodes.OK, result.output
    assert 'Wrote 1 rows' in result.stderr
    table = pd.read_csv(out, comment='#')
    assert table['origin'].iloc[0] == 'lemma2'
