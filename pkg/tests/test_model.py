import numpy as np
import pytest

from calculation.errors import Check, PreconditionError
from calculation.model import (
    BRANCH_CHAIN_1, BRANCH_CHAIN_2, OUTER_CHAIN_1, OUTER_CHAIN_2, AuxSystem,
    FunctionClass, SourceModel, Var, bernoulli_example_model,
    build_joint, check_admissible, check_degradedness, classify_function,
    function_residuals, induced_joint, verify_markov)
from calculation.prob_core import Tolerances, mutual_information

SIZES = {Var.Q: 1, Var.U1: 3, Var.V1: 2, Var.U2: 3, Var.V2: 2}


def test_bernoulli_example_structure(bernoulli_model):
    assert classify_function(bernoulli_model) is FunctionClass.INVERTIBLE
    report = check_degradedness(bernoulli_model)
    assert report.fusion_degraded
    assert not report.eve_degraded
    assert report.residual_eve > 1e-3


def test_bernoulli_example_rejects_bad_parameters():
    with pytest.raises(PreconditionError) as info:
        bernoulli_example_model(0.2, 1.1, 0.3, 0.25)
    assert info.value.check is Check.BAD_ARGUMENT


@pytest.mark.parametrize('f, expected', [
    ('pair', FunctionClass.INVERTIBLE),
    ('first', FunctionClass.PARTIALLY_INVERTIBLE_WRT_1),
    ('second', FunctionClass.PARTIALLY_INVERTIBLE_WRT_2),
    ('constant', FunctionClass.GENERAL),
    ('and', FunctionClass.GENERAL),
])
def test_function_classes(rng, model_factory, f, expected):
    model = model_factory(rng, f=f)
    assert classify_function(model) is expected
    assert set(function_residuals(model)) == {
        'H(X1,X2|F,Y)', 'H(X1|F,Y)', 'H(X2|F,Y)'}


def test_and_function_needs_both_measurements(rng, model_factory):
    model = model_factory(rng, f='and')
    keep_first = AuxSystem(
        weights=[1.0], u1=np.eye(2)[None], v1=np.ones((1, 2, 1)),
        u2=np.ones((1, 2, 1)), v2=np.ones((1, 1, 1)))
    admissible, residual = check_admissible(model, keep_first)
    assert not admissible
    assert residual > 1e-6
    assert check_admissible(model, AuxSystem.identity(model))[0]


def test_bernoulli_example_point_mass(bernoulli_model):
    mass = build_joint(bernoulli_model).tensor(
        (Var.X, Var.X1, Var.X2, Var.Y, Var.Z))
    assert mass[1, 1, 1, 1, 1] == pytest.approx(0.000825, abs=1e-12)
    assert mass.sum() == pytest.approx(1.0, abs=1e-12)


def test_measurements_are_independent_given_source(rng, model_factory):
    for _ in range(100):
        joint = build_joint(model_factory(rng, sizes=(3, 2, 3, 2, 2)))
        assert mutual_information(
            joint, Var.X1, (Var.X2, Var.Y, Var.Z), Var.X) \
            == pytest.approx(0.0, abs=1e-12)
        assert mutual_information(
            joint, Var.X2, (Var.Y, Var.Z), Var.X) \
            == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize('channel', [
    'general', 'eve_degraded', 'fusion_degraded'])
def test_degradedness_ignores_symbol_order(rng, model_factory, relabel,
                                           channel):
    for _ in range(10):
        model = model_factory(rng, sizes=(3, 2, 2, 3, 2), channel=channel)
        before = check_degradedness(model)
        after = check_degradedness(relabel(model, rng)[0])
        assert after.eve_degraded == before.eve_degraded
        assert after.fusion_degraded == before.fusion_degraded
        assert after.residual_eve == pytest.approx(
            before.residual_eve, abs=1e-10)
        assert after.residual_fusion == pytest.approx(
            before.residual_fusion, abs=1e-10)


def test_partial_invertibility_flags():
    assert FunctionClass.INVERTIBLE.partially_invertible(2)
    assert FunctionClass.PARTIALLY_INVERTIBLE_WRT_1.partially_invertible(1)
    assert not FunctionClass.PARTIALLY_INVERTIBLE_WRT_1.partially_invertible(2)
    assert not FunctionClass.GENERAL.partially_invertible(1)


def test_degraded_families(rng, model_factory):
    for _ in range(20):
        eve = check_degradedness(model_factory(rng, channel='eve_degraded'))
        assert eve.eve_degraded and eve.residual_eve <= 1e-12
        fusion = check_degradedness(
            model_factory(rng, channel='fusion_degraded'))
        assert fusion.fusion_degraded and fusion.residual_fusion <= 1e-12


def test_eve_sees_fusion_output():
    # Z = Y: the eavesdropper is degraded with zero residual
    py = np.array([[0.9, 0.1], [0.2, 0.8]])
    ch_yz = np.einsum('xy,yz->xyz', py, np.eye(2))
    model = SourceModel.from_arrays(
        alphabets={Var.X: '01', Var.X1: '01', Var.X2: '01', Var.Y: '01',
                   Var.Z: '01', Var.F: '0123'},
        p_x=[0.4, 0.6], ch1=[[0.9, 0.1], [0.1, 0.9]],
        ch2=[[0.8, 0.2], [0.3, 0.7]], ch_yz=ch_yz,
        f_table=[[[0, 0], [1, 1]], [[2, 2], [3, 3]]])
    report = check_degradedness(model)
    assert report.eve_degraded
    assert report.residual_eve <= 1e-12


def test_identity_aux_is_admissible(bernoulli_model):
    admissible, residual = check_admissible(
        bernoulli_model, AuxSystem.identity(bernoulli_model))
    assert admissible
    assert residual == 0.0


def test_constant_aux_is_not_admissible(bernoulli_model):
    admissible, residual = check_admissible(
        bernoulli_model, AuxSystem.constant(bernoulli_model))
    assert not admissible
    assert residual > 0.1


def test_random_aux_markov_chains(rng, model_factory):
    for _ in range(10):
        model = model_factory(rng)
        joint = induced_joint(model, AuxSystem.random(model, SIZES, rng))
        assert verify_markov(joint, OUTER_CHAIN_1) <= 1e-9
        assert verify_markov(joint, OUTER_CHAIN_2) <= 1e-9


def test_time_shared_branch_chains(rng, model_factory):
    model = model_factory(rng)
    aux = AuxSystem.random(model, SIZES | {Var.Q: 2}, rng)
    joint = induced_joint(model, aux)
    assert verify_markov(joint, BRANCH_CHAIN_1, given=Var.Q) <= 1e-9
    assert verify_markov(joint, BRANCH_CHAIN_2, given=Var.Q) <= 1e-9
    # Q carries X1 information once U1 depends on both
    assert verify_markov(joint, OUTER_CHAIN_1) > 1e-9


def test_verify_markov_needs_three_sets(bernoulli_model):
    joint = induced_joint(bernoulli_model, AuxSystem.identity(bernoulli_model))
    with pytest.raises(ValueError):
        verify_markov(joint, (Var.X, Var.Y))
    with pytest.raises(ValueError, match='overlap'):
        verify_markov(joint, (Var.X, Var.Y, Var.X))


def test_induced_joint_axes(bernoulli_model):
    joint = induced_joint(
        bernoulli_model, AuxSystem.identity(bernoulli_model), True)
    assert set(joint.names) == {
        'Q', 'X', 'X1', 'X2', 'Y', 'Z', 'U1', 'V1', 'U2', 'V2', 'F'}


def test_aux_serialization_keeps_fingerprint(rng, bernoulli_model):
    aux = AuxSystem.random(bernoulli_model, SIZES | {Var.Q: 2}, rng)
    again = AuxSystem.from_dict(aux.to_dict())
    assert again.fingerprint() == aux.fingerprint()
    assert aux.fingerprint() != AuxSystem.identity(bernoulli_model).fingerprint()
    assert aux.sizes == SIZES | {Var.Q: 2}


def test_aux_validation(bernoulli_model):
    aux = AuxSystem.identity(bernoulli_model).to_dict()
    with pytest.raises(ValueError, match='weights'):
        AuxSystem.from_dict(aux | {'weights': [0.7]})
    with pytest.raises(ValueError, match='not stochastic'):
        AuxSystem.from_dict(aux | {'u1': [[[0.5, 0.4], [0.0, 1.0]]]})


def test_aux_alphabet_mismatch(rng, model_factory, bernoulli_model):
    model = model_factory(rng, sizes=(2, 3, 2, 2, 2))
    with pytest.raises(PreconditionError) as info:
        AuxSystem.identity(bernoulli_model).channels(model)
    assert info.value.check is Check.ALPHABET_MISMATCH


def test_model_validation(bernoulli_model):
    with pytest.raises(ValueError, match='f table'):
        SourceModel(bernoulli_model.p_x, bernoulli_model.ch1,
                    bernoulli_model.ch2, bernoulli_model.ch_yz,
                    bernoulli_model.f_alphabet, np.zeros((2, 2), dtype=int))


def test_tolerances_are_respected(bernoulli_model):
    # A loose admissibility tolerance accepts the constant system
    admissible, _ = check_admissible(
        bernoulli_model, AuxSystem.constant(bernoulli_model),
        Tolerances(adm=10.0))
    assert admissible
