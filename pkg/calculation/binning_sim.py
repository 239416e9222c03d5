"""Finite-blocklength random binning simulator.

Each transmitter maps its n-letter sequence to bin indices: a public index F
and a stored message W per layer (V1, U1 for transmitter 1, V2, U2 for
transmitter 2). Bins are nested: every sequence gets one uniform random
code, and its bin index is the low bits of that code. For a fixed seed a
higher W-rate therefore refines the bins of a lower one.

Two evaluation modes are provided:
    - exact: invertible functions only, bins directly on (X1^n, X2^n). The
      full n-letter joint is enumerated, giving the MAP error probability
      and the secrecy and privacy leakages of (W1, W2) exactly, with the
      bin maps held fixed.
    - monte_carlo: sampled trials decoded by MAP, either jointly on
      (X1^n, X2^n) (invertible) or layer by layer in the order V1, V2, U1,
      U2 (aux). Only the error probability is estimated, with a Wilson
      interval.

Sequences are indexed in mixed radix with the first letter most significant,
so index order is lexicographic order. MAP ties go to the smallest index.
"""

import logging
import math
from dataclasses import dataclass, fields
from calculation._compat import StrEnum
from functools import cached_property

import numpy as np
from joblib import Parallel, delayed
from scipy.special import entr
from scipy.stats import binomtest

from calculation.errors import Check, ConsistencyError, PreconditionError
from calculation.model import (
    FunctionClass, Var, build_joint, classify_function, induced_joint)
from calculation.prob_core import DEFAULT_TOLERANCES, conditional_entropy, \
    mutual_information

logger = logging.getLogger(__name__)

# Enumerated n-letter states of (X, X1, X2, Y, Z) in exact mode
MAX_STATES = 10 ** 8
# Sequences per binned layer
MAX_LAYER_SPACE = 2 ** 22
# Candidate (x1^n, x2^n) pairs scored by one joint MAP decision
MAX_CANDIDATE_PAIRS = 2 ** 24
DEFAULT_EPSILON = 0.01
DEFAULT_SEEDS = 10
DEFAULT_TRIALS = 1000
DEFAULT_CONFIDENCE = 0.95
MC_CHUNK = 256
# Random codes are drawn below 2**CODE_BITS
CODE_BITS = 62
# Slack when turning n * rate into a whole number of bits
_BIT_SLACK = 1e-9


class SimMode(StrEnum):
    """Enum for simulation modes."""
    EXACT = 'exact'
    MONTE_CARLO = 'monte_carlo'


class Layer(StrEnum):
    """Binned layers in decoding order."""
    V1 = 'v1'
    V2 = 'v2'
    U1 = 'u1'
    U2 = 'u2'


LAYER_VARS = {Layer.V1: Var.V1, Layer.V2: Var.V2,
              Layer.U1: Var.U1, Layer.U2: Var.U2}


@dataclass(frozen=True)
class LayerRate:
    """Public (F) and stored (W) rate of one layer in bits/symbol."""
    f: float = 0.0
    w: float = 0.0

    def __post_init__(self):
        for label, value in (('F', self.f), ('W', self.w)):
            if not math.isfinite(value) or value < 0:
                raise PreconditionError(
                    Check.BAD_ARGUMENT, f'{label}-rate {value} must be >= 0.')


@dataclass(frozen=True)
class BinRates:
    v1: LayerRate = LayerRate()
    v2: LayerRate = LayerRate()
    u1: LayerRate = LayerRate()
    u2: LayerRate = LayerRate()

    @classmethod
    def invertible(cls, w1, w2):
        """Rates for binning directly on X1^n and X2^n."""
        return cls(u1=LayerRate(w=w1), u2=LayerRate(w=w2))

    @property
    def w1(self):
        return self.v1.w + self.u1.w

    @property
    def w2(self):
        return self.v2.w + self.u2.w

    def layer(self, layer):
        return getattr(self, str(layer))

    def scaled(self, factor):
        """Same layers with every W-rate multiplied by `factor`."""
        return BinRates(**{
            str(layer): LayerRate(self.layer(layer).f,
                                  self.layer(layer).w * factor)
            for layer in Layer})


def rate_bits(n, rate):
    """Whole bits for a rate over n letters, ceil(n * rate)."""
    return max(0, math.ceil(n * rate - _BIT_SLACK))


def sequence_letters(size, n):
    """Letters of every sequence, shape (size**n, n), in index order."""
    return np.stack(
        np.unravel_index(np.arange(size ** n), (size,) * n), axis=1)


def sequence_index(letters, size):
    """Mixed-radix index of letter rows, first letter most significant."""
    letters = np.atleast_2d(letters)
    return np.ravel_multi_index(tuple(letters.T), (size,) * letters.shape[1])


@dataclass(frozen=True, eq=False)
class LayerBins:
    """Bin map of one layer over all sequences of its alphabet.

    Attributes:
        layer: Layer
        size: alphabet size
        n: blocklength
        f_bits: bits of the public index F
        w_bits: bits of the stored index W
        codes: per-sequence random code; W is its low w_bits, F the next
            f_bits
    """
    layer: Layer
    size: int
    n: int
    f_bits: int
    w_bits: int
    codes: np.ndarray

    def w(self, index):
        return np.asarray(self.codes[index]) & ((1 << self.w_bits) - 1)

    def f(self, index):
        return (np.asarray(self.codes[index]) >> self.w_bits) \
            & ((1 << self.f_bits) - 1)

    def key(self, index):
        """Combined (F, W) bin key."""
        return np.asarray(self.codes[index]) \
            & ((1 << (self.f_bits + self.w_bits)) - 1)

    @cached_property
    def _sorted(self):
        keys = self.codes & ((1 << (self.f_bits + self.w_bits)) - 1)
        order = np.argsort(keys, kind='stable')
        return keys[order], order

    def members(self, key):
        """Sequence indices in a bin, ascending."""
        keys, order = self._sorted
        lo, hi = np.searchsorted(keys, [key, key + 1])
        return order[lo:hi]

    @cached_property
    def letters(self):
        return sequence_letters(self.size, self.n)


def _draw_layer(layer, size, n, f_bits, w_bits, seed, injective):
    space = size ** n
    if space > MAX_LAYER_SPACE:
        raise PreconditionError(
            Check.ENUMERATION_GUARD,
            f'{size}^{n} sequences in layer {layer}.')

    cap = rate_bits(n, math.log2(size)) if size > 1 else 0
    if w_bits > cap:
        logger.warning('Layer %s W-rate %.4g exceeds log2 of %d sequences; '
                       'capped at %d bits', layer, w_bits / n, space, cap)
        w_bits, injective = cap, True
    f_bits = min(f_bits, cap)

    rng = np.random.default_rng([seed, 0, list(Layer).index(layer)])
    if injective and w_bits == cap:
        # A permutation of the space keeps W one-to-one
        codes = rng.permutation(space).astype(np.int64)
        f_bits = 0
    else:
        codes = rng.integers(0, 1 << CODE_BITS, size=space, dtype=np.int64)
    return LayerBins(layer, size, n, f_bits, w_bits, codes)


@dataclass(frozen=True, eq=False)
class BinAssignment:
    """Seeded bin maps for one blocklength.

    In invertible mode only the U layers exist, over X1^n and X2^n, and
    each carries the transmitter's whole W-rate.
    """
    n: int
    rates: BinRates
    seed: int
    layers: dict

    @property
    def invertible(self):
        return Layer.V1 not in self.layers

    def bits(self, transmitter):
        return sum(self.layers[layer].w_bits for layer in self.layers
                   if str(layer).endswith(str(transmitter)))

    @property
    def storage1(self):
        return self.bits(1) / self.n

    @property
    def storage2(self):
        return self.bits(2) / self.n


def make_binning(n, rates, model, aux=None, seed=0, injective=False):
    """Draw bin maps for blocklength n.

    Args:
        n: blocklength, >= 1
        rates: BinRates
        model: SourceModel
        aux: optional AuxSystem; bins go on X1^n, X2^n when omitted
        seed: random seed
        injective: draw W as a permutation when its bits cover the space
    Returns:
        BinAssignment
    """
    if n < 1:
        raise PreconditionError(Check.BAD_ARGUMENT, f'n = {n}.')
    if aux is None:
        layers = {
            Layer.U1: _draw_layer(Layer.U1, model.x1.size, n, 0,
                                  rate_bits(n, rates.w1), seed, injective),
            Layer.U2: _draw_layer(Layer.U2, model.x2.size, n, 0,
                                  rate_bits(n, rates.w2), seed, injective),
        }
    else:
        sizes = aux.sizes
        w_bits = _split_w_bits(n, rates)
        layers = {
            layer: _draw_layer(layer, sizes[LAYER_VARS[layer]], n,
                               rate_bits(n, rates.layer(layer).f),
                               w_bits[layer], seed, injective)
            for layer in Layer}
    return BinAssignment(n, rates, seed, layers)


def _split_w_bits(n, rates):
    """Per-layer W bits; each transmitter stores ceil(n * (w_v + w_u)).

    The V layer takes ceil(n * w_v) and the U layer the rest, at least 0.
    """
    split = {}
    for v_layer, u_layer, total in ((Layer.V1, Layer.U1, rates.w1),
                                    (Layer.V2, Layer.U2, rates.w2)):
        v_bits = rate_bits(n, rates.layer(v_layer).w)
        split[v_layer] = v_bits
        split[u_layer] = max(rate_bits(n, total) - v_bits, 0)
    return split


@dataclass(frozen=True)
class SimReport:
    """Operational quantities of one simulation run, in bits/symbol.

    Leakages are None in Monte Carlo mode; interval bounds are None in
    exact mode.
    """
    n: int
    mode: SimMode
    error_prob: float
    storage1: float
    storage2: float
    secrecy_leak: float = None
    priv_dec: float = None
    priv_eve: float = None
    ci_low: float = None
    ci_high: float = None
    trials: int = None
    seed: int = None

    @property
    def ci_radius(self):
        if self.ci_low is None:
            return None
        return (self.ci_high - self.ci_low) / 2

    def as_record(self):
        record = {f.name: getattr(self, f.name) for f in fields(self)}
        record['mode'] = str(self.mode)
        return record


def _require_invertible(model, tol):
    if classify_function(model, tol) is not FunctionClass.INVERTIBLE:
        raise PreconditionError(Check.NOT_INVERTIBLE)


def _group_entropy(columns, p):
    """Entropy of the joint of integer-valued columns under weights p."""
    keys = np.column_stack(columns)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=p)
    return float(entr(mass).sum() / np.log(2))


def _cond_entropy(target, given, p, tol):
    value = _group_entropy([target, *given], p) - _group_entropy(given, p)
    if value < -tol.num:
        raise ConsistencyError(f'Conditional entropy {value:.6g} < 0.')
    return max(value, 0.0)


def _enumerate_states(model, n):
    """n-letter support states as probabilities and per-variable indices."""
    names = (Var.X, Var.X1, Var.X2, Var.Y, Var.Z)
    letter = build_joint(model).tensor(names)
    states = int(np.prod(letter.shape)) ** n
    if states > MAX_STATES:
        raise PreconditionError(
            Check.ENUMERATION_GUARD, f'{states} states for n = {n}.')

    support = np.flatnonzero(letter.ravel() > 0)
    p1 = letter.ravel()[support]
    comps = np.unravel_index(support, letter.shape)
    p = p1.copy()
    index = {name: c.astype(np.int64) for name, c in zip(names, comps)}
    for _ in range(n - 1):
        p = np.outer(p, p1).ravel()
        for name, size, c in zip(names, letter.shape, comps):
            index[name] = np.add.outer(index[name] * size, c).ravel()
    return p, index


def simulate_exact(model, n, rates, seed=0, injective=False,
                   tol=DEFAULT_TOLERANCES):
    """Exact MAP error and leakages for binning on (X1^n, X2^n).

    Args:
        model: SourceModel with invertible f
        n: blocklength
        rates: BinRates; per transmitter the W-rates are pooled
        seed: binning seed
        injective: see make_binning
        tol: Tolerances
    Returns:
        SimReport in exact mode
    """
    _require_invertible(model, tol)
    p, idx = _enumerate_states(model, n)
    bins = make_binning(n, rates, model, None, seed, injective)
    b1, b2 = bins.layers[Layer.U1], bins.layers[Layer.U2]
    w = b1.w(idx[Var.X1]) * (1 << b2.w_bits) + b2.w(idx[Var.X2])

    # MAP over pairs given (W, Y^n): keep the heaviest pair of every cell
    pair = idx[Var.X1] * model.x2.size ** n + idx[Var.X2]
    _, first, inverse = np.unique(
        np.column_stack([pair, idx[Var.Y]]), axis=0,
        return_index=True, return_inverse=True)
    pair_mass = np.bincount(inverse.ravel(), weights=p)
    _, cell = np.unique(
        np.column_stack([w[first], idx[Var.Y][first]]), axis=0,
        return_inverse=True)
    cell = cell.ravel()
    best = np.zeros(cell.max() + 1)
    np.maximum.at(best, cell, pair_mass)
    error = min(max(1.0 - math.fsum(best), 0.0), 1.0)

    h_wz = _cond_entropy(w, [idx[Var.Z]], p, tol)
    report = SimReport(
        n=n, mode=SimMode.EXACT, error_prob=error,
        storage1=bins.storage1, storage2=bins.storage2,
        secrecy_leak=h_wz / n,
        priv_dec=max(_cond_entropy(w, [idx[Var.Y]], p, tol)
                     - _cond_entropy(w, [idx[Var.X], idx[Var.Y]], p, tol),
                     0.0) / n,
        priv_eve=max(h_wz - _cond_entropy(w, [idx[Var.X], idx[Var.Z]], p, tol),
                     0.0) / n,
        seed=seed
    )
    logger.info('Exact n=%d seed=%d: error %.6g', n, seed, error)
    return report


# Layer decoded at each step and the already known context it uses
_DECODING_ORDER = (
    (Layer.V1, (Var.Y,)),
    (Layer.V2, (Var.V1, Var.Y)),
    (Layer.U1, (Var.V1, Var.V2, Var.Y)),
    (Layer.U2, (Var.U1, Var.V1, Var.V2, Var.Y)),
)


@dataclass(frozen=True, eq=False)
class _TrialContext:
    """Everything a Monte Carlo chunk needs, picklable for joblib."""
    n: int
    seed: int
    bins: BinAssignment
    probs: np.ndarray
    letters: dict
    log_tables: dict
    f_table: np.ndarray
    g_map: np.ndarray


def _log(mass):
    with np.errstate(divide='ignore'):
        return np.log(mass)


def _decode(bins, true_index, log_table, context):
    """MAP sequence in the true sequence's bin given decoded context letters.

    Args:
        bins: LayerBins of the decoded layer
        true_index: index of the transmitted sequence
        log_table: log-probabilities, decoded variable on axis 0 and the
            context variables on the remaining axes
        context: (n, k) array of context letters
    Returns:
        decoded sequence index
    """
    candidates = bins.members(bins.key(true_index))
    per_letter = log_table[(slice(None),) + tuple(context.T)]
    scores = per_letter[bins.letters[candidates], np.arange(bins.n)].sum(axis=1)
    return candidates[np.argmax(scores)]


def _decode_pair(b1, b2, i1, i2, log_table, y):
    c1 = b1.members(b1.key(i1))
    c2 = b2.members(b2.key(i2))
    if c1.size * c2.size > MAX_CANDIDATE_PAIRS:
        raise PreconditionError(
            Check.ENUMERATION_GUARD, f'{c1.size * c2.size} candidate pairs.')
    l1, l2 = b1.letters[c1], b2.letters[c2]
    scores = np.zeros((c1.size, c2.size))
    for t in range(b1.n):
        scores += log_table[l1[:, t]][:, l2[:, t], y[t]]
    best = int(np.argmax(scores))
    return c1[best // c2.size], c2[best % c2.size]


def _chunk_errors(ctx, chunk, size):
    rng = np.random.default_rng([ctx.seed, 1, chunk])
    states = rng.choice(ctx.probs.size, size=(size, ctx.n), p=ctx.probs)
    letters = {name: comp[states] for name, comp in ctx.letters.items()}
    errors = 0
    if ctx.bins.invertible:
        b1, b2 = ctx.bins.layers[Layer.U1], ctx.bins.layers[Layer.U2]
        i1 = sequence_index(letters[Var.X1], b1.size)
        i2 = sequence_index(letters[Var.X2], b2.size)
        for t in range(size):
            d1, d2 = _decode_pair(
                b1, b2, i1[t], i2[t], ctx.log_tables['pair'],
                letters[Var.Y][t])
            errors += int(d1 != i1[t] or d2 != i2[t])
        return errors

    layers = ctx.bins.layers
    index = {layer: sequence_index(letters[LAYER_VARS[layer]],
                                   layers[layer].size) for layer in Layer}
    for t in range(size):
        decoded = {Var.Y: letters[Var.Y][t]}
        for layer, context in _DECODING_ORDER:
            est = _decode(
                layers[layer], index[layer][t], ctx.log_tables[layer],
                np.column_stack([decoded[v] for v in context]))
            decoded[LAYER_VARS[layer]] = layers[layer].letters[est]
        f_hat = ctx.g_map[decoded[Var.U1], decoded[Var.U2], decoded[Var.Y]]
        f_true = ctx.f_table[
            letters[Var.X1][t], letters[Var.X2][t], letters[Var.Y][t]]
        errors += int(np.any(f_hat != f_true))
    return errors


def _trial_context(model, aux, n, bins, seed, trials):
    if aux is None:
        names = (Var.X1, Var.X2, Var.Y)
        letter = build_joint(model).tensor(names)
        log_tables = {'pair': _log(letter)}
        g_map = None
    else:
        names = (Var.X1, Var.X2, Var.Y, Var.U1, Var.V1, Var.U2, Var.V2)
        joint = induced_joint(model, aux, with_function=True)
        letter = joint.tensor(names)
        log_tables = {
            layer: _log(joint.tensor((LAYER_VARS[layer],) + context))
            for layer, context in _DECODING_ORDER}
        g_map = joint.tensor((Var.U1, Var.U2, Var.Y, Var.F)).argmax(axis=3)

    support = np.flatnonzero(letter.ravel() > 0)
    probs = letter.ravel()[support]
    comps = np.unravel_index(support, letter.shape)
    ctx = _TrialContext(
        n=n, seed=seed, bins=bins, probs=probs / probs.sum(),
        letters=dict(zip(names, comps)), log_tables=log_tables,
        f_table=model.f_table, g_map=g_map)
    return ctx


def _chunks(trials):
    return [(c, min(MC_CHUNK, trials - c * MC_CHUNK))
            for c in range(math.ceil(trials / MC_CHUNK))]


def simulate_mc(model, n, rates, seed=0, trials=DEFAULT_TRIALS, aux=None,
                injective=False, n_jobs=1, confidence=DEFAULT_CONFIDENCE,
                tol=DEFAULT_TOLERANCES):
    """Monte Carlo estimate of the MAP error probability.

    Trials run in chunks of MC_CHUNK, chunk c drawing from a generator
    seeded by (seed, 1, c), so the estimate does not depend on n_jobs.

    Args:
        model: SourceModel
        n: blocklength
        rates: BinRates
        seed: seed for bins and trials
        trials: number of trials, >= 1
        aux: optional AuxSystem; selects successive layer decoding
        injective: see make_binning
        n_jobs: joblib worker count
        confidence: Wilson interval confidence level
        tol: Tolerances
    Returns:
        SimReport in monte_carlo mode
    """
    if trials < 1:
        raise PreconditionError(Check.BAD_ARGUMENT, f'trials = {trials}.')
    if not 0 < confidence < 1:
        raise PreconditionError(
            Check.BAD_ARGUMENT, f'confidence = {confidence}.')
    if aux is None:
        _require_invertible(model, tol)

    bins = make_binning(n, rates, model, aux, seed, injective)
    ctx = _trial_context(model, aux, n, bins, seed, trials)
    counts = Parallel(n_jobs=n_jobs)(
        delayed(_chunk_errors)(ctx, c, size) for c, size in _chunks(trials))
    errors = sum(counts)
    ci = binomtest(errors, trials).proportion_ci(
        confidence_level=confidence, method='wilson')
    logger.info('Monte Carlo n=%d seed=%d: %d/%d errors', n, seed, errors,
                trials)
    return SimReport(
        n=n, mode=SimMode.MONTE_CARLO, error_prob=errors / trials,
        storage1=bins.storage1, storage2=bins.storage2,
        ci_low=float(ci.low), ci_high=float(ci.high), trials=trials, seed=seed)


def default_rates(model, aux=None, epsilon=DEFAULT_EPSILON,
                  tol=DEFAULT_TOLERANCES):
    """Bin rates of the achievability scheme for a slack epsilon.

    With an auxiliary system the per-layer rates are
        F_v1 = H(V1|X1) - e,      W_v1 = I(V1;X1) - I(V1;Y) + 2e
        F_v2 = H(V2|X2) - e,      W_v2 = I(V2;X2) - I(V2;V1,Y) + 2e
        F_u1 = H(U1|V1,X1) - e,   W_u1 = I(U1;X1|V1) - I(U1;V2,Y|V1) + 2e
        F_u2 = H(U2|V2,X2) - e,   W_u2 = I(U2;X2|V2) - I(U2;U1,Y|V2) + 2e
    clipped at zero. Without one, the corner W-rates H(X1|Y) + 4e and
    H(X2|X1,Y) + 4e are returned on the U layers.

    Args:
        model: SourceModel
        aux: optional AuxSystem
        epsilon: slack, > 0
        tol: Tolerances
    Returns:
        BinRates
    """
    if not epsilon > 0:
        raise PreconditionError(Check.BAD_EPSILON, f'epsilon = {epsilon}.')
    e = epsilon

    if aux is None:
        joint = build_joint(model)
        return BinRates.invertible(
            conditional_entropy(joint, Var.X1, Var.Y, tol) + 4 * e,
            conditional_entropy(joint, Var.X2, (Var.X1, Var.Y), tol) + 4 * e)

    joint = induced_joint(model, aux)

    def i(a, b, given=()):
        return mutual_information(joint, a, b, given, tol)

    def h(a, given=()):
        return conditional_entropy(joint, a, given, tol)

    def rate(f, w):
        return LayerRate(max(f, 0.0), max(w, 0.0))

    return BinRates(
        v1=rate(h(Var.V1, Var.X1) - e,
                i(Var.V1, Var.X1) - i(Var.V1, Var.Y) + 2 * e),
        v2=rate(h(Var.V2, Var.X2) - e,
                i(Var.V2, Var.X2) - i(Var.V2, (Var.V1, Var.Y)) + 2 * e),
        u1=rate(h(Var.U1, (Var.V1, Var.X1)) - e,
                i(Var.U1, Var.X1, Var.V1)
                - i(Var.U1, (Var.V2, Var.Y), Var.V1) + 2 * e),
        u2=rate(h(Var.U2, (Var.V2, Var.X2)) - e,
                i(Var.U2, Var.X2, Var.V2)
                - i(Var.U2, (Var.U1, Var.Y), Var.V2) + 2 * e),
    )


def average_reports(reports):
    """Average reports of one configuration over binning seeds.

    Numeric fields are averaged with compensated summation; fields that are
    None in any report stay None.
    """
    reports = list(reports)
    if not reports:
        raise PreconditionError(Check.BAD_ARGUMENT, 'No reports to average.')
    if len({(r.n, r.mode) for r in reports}) != 1:
        raise PreconditionError(
            Check.BAD_ARGUMENT, 'Reports differ in n or mode.')

    def mean(name):
        values = [getattr(r, name) for r in reports]
        if any(v is None for v in values):
            return None
        return math.fsum(values) / len(values)

    first = reports[0]
    trials = [r.trials for r in reports]
    return SimReport(
        n=first.n, mode=first.mode,
        error_prob=mean('error_prob'),
        storage1=mean('storage1'), storage2=mean('storage2'),
        secrecy_leak=mean('secrecy_leak'), priv_dec=mean('priv_dec'),
        priv_eve=mean('priv_eve'),
        trials=None if None in trials else sum(trials)
    )
