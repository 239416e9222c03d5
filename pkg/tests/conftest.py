"""Shared fixtures: the Bernoulli example model and random model factories."""

import numpy as np
import pytest

from calculation.model import SourceModel, Var, bernoulli_example_model

BERNOULLI_PARAMS = (0.2, 0.11, 0.3, 0.25)
BERNOULLI_LEMMA4 = {
    'r_s': 0.7579, 'r_w1': 0.4626, 'r_w2': 0.3021,
    'r_w_sum': 0.7686, 'r_l_dec': 0.1577, 'r_l_eve': 0.1469,
}


def symbols(size):
    return tuple(str(k) for k in range(size))


def stochastic(rng, rows, cols):
    return rng.dirichlet(np.ones(cols), size=rows)


def make_model(rng, sizes=(2, 2, 2, 2, 2), channel='general', f='pair'):
    """Random model with Dirichlet source and channels.

    Args:
        rng: numpy Generator
        sizes: (|X|, |X1|, |X2|, |Y|, |Z|)
        channel: 'general', 'eve_degraded' (X-Y-Z) or 'fusion_degraded'
            (X-Z-Y)
        f: 'pair' (invertible), 'first' or 'second' (partially invertible),
            'constant', or 'xor' and 'and' (binary inputs)
    """
    nx, n1, n2, ny, nz = sizes
    match channel:
        case 'general':
            ch_yz = stochastic(rng, nx, ny * nz).reshape(nx, ny, nz)
        case 'eve_degraded':
            ch_yz = np.einsum('xy,yz->xyz', stochastic(rng, nx, ny),
                              stochastic(rng, ny, nz))
        case 'fusion_degraded':
            ch_yz = np.einsum('xz,zy->xyz', stochastic(rng, nx, nz),
                              stochastic(rng, nz, ny))

    i, j, _ = np.meshgrid(
        np.arange(n1), np.arange(n2), np.arange(ny), indexing='ij')
    tables = {
        'pair': (i * n2 + j, n1 * n2),
        'first': (i, n1),
        'second': (j, n2),
        'constant': (np.zeros_like(i), 1),
        'xor': ((i + j) % 2, 2),
        'and': (i * j, 2),
    }
    f_table, f_size = tables[f]
    return SourceModel.from_arrays(
        alphabets={Var.X: symbols(nx), Var.X1: symbols(n1),
                   Var.X2: symbols(n2), Var.Y: symbols(ny),
                   Var.Z: symbols(nz), Var.F: symbols(f_size)},
        p_x=rng.dirichlet(np.ones(nx)),
        ch1=stochastic(rng, nx, n1),
        ch2=stochastic(rng, nx, n2),
        ch_yz=ch_yz,
        f_table=f_table
    )


def relabel_model(model, rng):
    """Same model with the positions of X, X1, X2, Y and Z permuted.

    Returns:
        (model, perms) with perms keyed by Var; position k of the new model
        holds position perms[var][k] of the old one
    """
    axes = {Var.X: model.x, Var.X1: model.x1, Var.X2: model.x2,
            Var.Y: model.y, Var.Z: model.z}
    perms = {v: rng.permutation(a.size) for v, a in axes.items()}
    px, p1, p2, py, pz = perms.values()
    relabeled = SourceModel.from_arrays(
        alphabets={v: a.symbols for v, a in axes.items()}
        | {Var.F: model.f_alphabet.symbols},
        p_x=model.p_x.mass[px],
        ch1=model.ch1.kernel[np.ix_(px, p1)],
        ch2=model.ch2.kernel[np.ix_(px, p2)],
        ch_yz=model.ch_yz.kernel[np.ix_(px, py, pz)],
        f_table=model.f_table[np.ix_(p1, p2, py)]
    )
    return relabeled, perms


@pytest.fixture
def bernoulli_model():
    return bernoulli_example_model(*BERNOULLI_PARAMS)


@pytest.fixture
def bernoulli_lemma4():
    # Lemma 4 bounds of the example, rounded to four decimals
    return dict(BERNOULLI_LEMMA4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def model_factory():
    return make_model


@pytest.fixture
def observed_model():
    """X = (X1, X2) and the fusion center sees X itself."""
    ch_yz = np.eye(4)[:, :, None]
    f_table = np.broadcast_to(
        np.arange(4).reshape(2, 2, 1), (2, 2, 4)).copy()
    return SourceModel.from_arrays(
        alphabets={Var.X: '0123', Var.X1: '01', Var.X2: '01',
                   Var.Y: '0123', Var.Z: ('-',), Var.F: '0123'},
        p_x=[0.1, 0.2, 0.3, 0.4],
        ch1=np.eye(2)[[0, 0, 1, 1]], ch2=np.eye(2)[[0, 1, 0, 1]],
        ch_yz=ch_yz, f_table=f_table)


@pytest.fixture
def relabel():
    return relabel_model
