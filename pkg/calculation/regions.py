"""Single-letter rate region bounds.

Every bound is reported as a RateBounds record: component-wise lower bounds
on (R_s, R_w1, R_w2, R_w1 + R_w2, R_l,Dec, R_l,Eve) and, for lossy regions,
the distortion D. Bounds come from the general inner and outer bounds
(lossless and lossy) and from the simplified regions for partially
invertible functions, invertible functions and the two degraded
measurement channels.

The [.]^- bracket is always evaluated on Q-conditioned terms, never per
branch. Final bounds below -tol.num raise ConsistencyError.
"""

import logging
from dataclasses import dataclass, replace
from calculation._compat import StrEnum

import numpy as np

from calculation.errors import Check, ConsistencyError, PreconditionError
from calculation.model import (
    OUTER_CHAIN_1, OUTER_CHAIN_2, AuxSystem, FunctionClass, Var,
    build_joint, check_admissible, check_degradedness, classify_function,
    induced_joint, verify_markov)
from calculation.prob_core import (
    DEFAULT_TOLERANCES, Alphabet, Channel, compose, conditional_entropy,
    mutual_information, neg_part)

logger = logging.getLogger(__name__)

RATE_FIELDS = ('r_s', 'r_w1', 'r_w2', 'r_w_sum', 'r_l_dec', 'r_l_eve')
# Random Q channels tried on top of the deterministic ones
DEFAULT_Q_SAMPLES = 64
# Deterministic Q maps are enumerated only up to this many (x1, x2) pairs
MAX_ENUMERATED_PAIRS = 16

_U = (Var.U1, Var.U2)
_V = (Var.V1, Var.V2)
_VQ = (Var.V1, Var.V2, Var.Q)
_XT = (Var.X1, Var.X2)


class Origin(StrEnum):
    """Theorem or lemma a bound set comes from."""
    THM1_INNER = 'thm1_inner'
    THM1_OUTER = 'thm1_outer'
    THM2_INNER = 'thm2_inner'
    THM2_OUTER = 'thm2_outer'
    LEMMA1 = 'lemma1'
    LEMMA2 = 'lemma2'
    LEMMA3 = 'lemma3'
    LEMMA4 = 'lemma4'


class CornerOrder(StrEnum):
    """Successive decoding order of a corner point."""
    ORDER_12 = 'order_12'
    ORDER_21 = 'order_21'


@dataclass(frozen=True)
class RateBounds:
    """Lower bounds in bits/symbol, tagged with their origin."""
    r_s: float
    r_w1: float
    r_w2: float
    r_w_sum: float
    r_l_dec: float
    r_l_eve: float
    origin: Origin
    d: float = None

    def values(self, with_d=None):
        """Bound coordinates as an array, D appended when present."""
        with_d = self.d is not None if with_d is None else with_d
        rates = [getattr(self, name) for name in RATE_FIELDS]
        return np.array(rates + [self.d] if with_d else rates, dtype=float)

    def as_record(self):
        """Flat record: origin, six rates and D (None when lossless)."""
        return {'origin': str(self.origin)} | {
            name: getattr(self, name) for name in RATE_FIELDS} | {'d': self.d}


@dataclass(frozen=True)
class CornerPoint:
    which: CornerOrder
    bounds: RateBounds


class _Terms:
    """Information terms on one joint with fixed tolerances."""

    def __init__(self, joint, tol):
        self.joint = joint
        self.tol = tol

    def i(self, a, b, given=()):
        return mutual_information(self.joint, a, b, given, self.tol)

    def h(self, a, given=()):
        return conditional_entropy(self.joint, a, given, self.tol)


def make_bounds(origin, rates, tol, d=None):
    """Check signs and build a RateBounds record."""
    checked = {}
    for name in RATE_FIELDS:
        value = float(rates[name])
        if value < -tol.num:
            raise ConsistencyError(
                f'{origin} bound {name} = {value:.6g} is negative.')
        checked[name] = max(value, 0.0)
    return RateBounds(origin=origin, d=d, **checked)


def inner_rates(joint, tol=DEFAULT_TOLERANCES):
    """The six inner-bound expressions on a joint with auxiliary axes.

    No admissibility check is made here.

    Args:
        joint: JointDist with Q, V1, V2, U1, U2, X1, X2, X, Y, Z axes
        tol: Tolerances
    Returns:
        dict of the six rate expressions keyed by RATE_FIELDS
    """
    t = _Terms(joint, tol)
    bracket = neg_part(t.i(_U, Var.Z, _VQ) - t.i(_U, Var.Y, _VQ))
    return {
        'r_s': bracket + t.i(_U, _XT, Var.Z),
        'r_w1': t.i(Var.V1, Var.X1, (Var.V2, Var.Y))
            + t.i(Var.U1, Var.X1, (Var.V1, Var.U2, Var.Y)),
        'r_w2': t.i(Var.V2, Var.X2, (Var.V1, Var.Y))
            + t.i(Var.U2, Var.X2, (Var.U1, Var.V2, Var.Y)),
        'r_w_sum': t.i(Var.U2, Var.X2, (Var.U1, Var.V2, Var.Y))
            + t.i(Var.U1, Var.X1, (Var.V1, Var.V2, Var.Y))
            + t.i(Var.V2, Var.X2, (Var.V1, Var.Y))
            + t.i(Var.V1, Var.X1, Var.Y),
        'r_l_dec': t.i(_U, Var.X, Var.Y),
        'r_l_eve': bracket + t.i(_U, Var.X, Var.Z),
    }


def _require_admissible(model, aux, tol):
    admissible, residual = check_admissible(model, aux, tol)
    if not admissible:
        raise PreconditionError(
            Check.INADMISSIBLE, f'Residual {residual:.3g} bits.')


def eval_inner_lossless(model, aux, tol=DEFAULT_TOLERANCES):
    """Lossless inner bound for an admissible auxiliary system.

    Args:
        model: SourceModel
        aux: AuxSystem, admissible for the target function
        tol: Tolerances
    Returns:
        RateBounds tagged thm1_inner
    """
    _require_admissible(model, aux, tol)
    joint = induced_joint(model, aux)
    return make_bounds(Origin.THM1_INNER, inner_rates(joint, tol), tol)


def _outer_rates(joint, tol):
    for chain in (OUTER_CHAIN_1, OUTER_CHAIN_2):
        residual = verify_markov(joint, chain, tol=tol)
        if residual > tol.num:
            raise PreconditionError(
                Check.MARKOV_VIOLATION,
                f'{"-".join(map(str, chain))}: {residual:.3g} bits.')

    t = _Terms(joint, tol)
    rates = inner_rates(joint, tol)
    rates['r_w1'] -= (
        t.i(Var.V1, Var.V2, (Var.X1, Var.Y))
        + t.i(Var.U1, Var.U2, (Var.X1, Var.Y, Var.V1)))
    rates['r_w2'] -= (
        t.i(Var.V2, Var.V1, (Var.X2, Var.Y))
        + t.i(Var.U2, Var.U1, (Var.X2, Var.Y, Var.V2)))
    return rates


def eval_outer_lossless(joint_with_aux, tol=DEFAULT_TOLERANCES):
    """Lossless outer bound on a supplied joint.

    The storage bounds carry the correction terms I(V1;V2|X1,Y) and
    I(U1;U2|X1,Y,V1) (and mirrors); the rest matches the inner bound.
    The Markov chains checked first contain Q, so a time-shared auxiliary
    system (|Q| > 1) normally fails them.

    Args:
        joint_with_aux: JointDist over the ten variables
        tol: Tolerances; tol.num also bounds the Markov chain residuals
    Returns:
        RateBounds tagged thm1_outer
    """
    return make_bounds(Origin.THM1_OUTER, _outer_rates(joint_with_aux, tol), tol)


def _posterior_costs(model, joint):
    # E[u1, u2, y, f_hat] = sum over x1, x2 of P(x1,x2,y,u1,u2) d(f, f_hat)
    if model.distortion is None:
        raise PreconditionError(Check.MISSING_DISTORTION)
    mass = joint.tensor((Var.X1, Var.X2, Var.Y, Var.U1, Var.U2))
    cost = model.distortion.d[model.f_table]
    return np.einsum('abyuv,abyf->uvyf', mass, cost)


def _reconstruction_table(model, joint, g):
    costs = _posterior_costs(model, joint)
    if g is None:
        # argmin returns the first minimum: ties go to the smallest index
        return costs, costs.argmin(axis=3)
    g = np.asarray(g, dtype=int)
    if g.shape != costs.shape[:3]:
        raise PreconditionError(
            Check.ALPHABET_MISMATCH,
            f'Reconstruction shape {g.shape}, expected {costs.shape[:3]}.')
    return costs, g


def expected_distortion(model, joint, g=None):
    """E[d(f(X1,X2,Y), g(U1,U2,Y))] on a joint with U axes.

    Args:
        model: SourceModel with a distortion metric
        joint: JointDist containing X1, X2, Y, U1, U2
        g: integer table (|U1|, |U2|, |Y|) of F_hat positions; optimal if None
    Returns:
        expected distortion
    """
    costs, g = _reconstruction_table(model, joint, g)
    return float(np.take_along_axis(costs, g[..., None], axis=3).sum())


def optimal_reconstruction(model, aux):
    """Distortion-minimizing reconstruction map g(u1, u2, y).

    Cells with zero probability map to F_hat index 0.

    Args:
        model: SourceModel with a distortion metric
        aux: AuxSystem
    Returns:
        integer array (|U1|, |U2|, |Y|) of F_hat positions
    """
    return _reconstruction_table(model, induced_joint(model, aux), None)[1]


def eval_inner_lossy(model, aux, g=None, tol=DEFAULT_TOLERANCES):
    """Lossy inner bound: inner rates plus D = E[d(f, g(U1,U2,Y))].

    Admissibility is not required. With g omitted the optimal
    reconstruction is used.
    """
    if model.distortion is None:
        raise PreconditionError(Check.MISSING_DISTORTION)
    joint = induced_joint(model, aux)
    d = expected_distortion(model, joint, g)
    return make_bounds(Origin.THM2_INNER, inner_rates(joint, tol), tol, d=d)


def eval_outer_lossy(model, joint_with_aux, g=None, tol=DEFAULT_TOLERANCES):
    """Lossy outer bound: outer rates plus distortion on the supplied joint."""
    if model.distortion is None:
        raise PreconditionError(Check.MISSING_DISTORTION)
    rates = _outer_rates(joint_with_aux, tol)
    d = expected_distortion(model, joint_with_aux, g)
    return make_bounds(Origin.THM2_OUTER, rates, tol, d=d)


def _force_identity(model, aux, wrt):
    # Replace U_wrt by a noiseless copy of X_wrt in every branch
    name_u, name_v = f'u{wrt}', f'v{wrt}'
    size = (model.x1 if wrt == 1 else model.x2).size
    if getattr(aux, name_v).shape[1] != size:
        raise PreconditionError(
            Check.ALPHABET_MISMATCH,
            f'V{wrt} channel must take |X{wrt}| = {size} inputs.')
    identity = np.tile(np.eye(size), (aux.q_size, 1, 1))
    return replace(aux, **{name_u: identity})


def eval_lemma1(model, aux, wrt=1, tol=DEFAULT_TOLERANCES):
    """Inner bound for a function partially invertible with respect to X_wrt.

    U_wrt is forced to be X_wrt; the other auxiliary variable must make the
    pair admissible. With wrt=2 every index is mirrored.

    Args:
        model: SourceModel
        aux: AuxSystem; its U_wrt channel is replaced
        wrt: 1 or 2
        tol: Tolerances
    Returns:
        RateBounds tagged lemma1
    """
    if wrt not in (1, 2):
        raise PreconditionError(Check.BAD_ARGUMENT, f'wrt = {wrt}.')
    if not classify_function(model, tol).partially_invertible(wrt):
        raise PreconditionError(
            Check.NOT_PARTIALLY_INVERTIBLE, f'Transmitter {wrt}.')
    aux = _force_identity(model, aux, wrt)
    _require_admissible(model, aux, tol)

    other = 3 - wrt
    xa, xb = Var(f'X{wrt}'), Var(f'X{other}')
    ub = Var(f'U{other}')
    va, vb = Var(f'V{wrt}'), Var(f'V{other}')
    t = _Terms(induced_joint(model, aux), tol)

    inputs = (xa, ub)
    bracket = neg_part(t.i(inputs, Var.Z, _VQ) - t.i(inputs, Var.Y, _VQ))
    rate_a = t.h(xa, (vb, Var.Y)) - t.i(xa, ub, (va, vb, Var.Y))
    rate_b = t.i(vb, xb, (va, Var.Y)) + t.i(ub, xb, (xa, vb, Var.Y))
    rates = {
        'r_s': bracket + t.h(xa, Var.Z) + t.i(ub, xb, (xa, Var.Z)),
        'r_w1': rate_a if wrt == 1 else rate_b,
        'r_w2': rate_b if wrt == 1 else rate_a,
        'r_w_sum': t.i(ub, xb, (xa, vb, Var.Y)) + t.h(xa, (va, vb, Var.Y))
            + t.i(vb, xb, (va, Var.Y)) + t.i(va, xa, Var.Y),
        'r_l_dec': t.i(inputs, Var.X, Var.Y),
        'r_l_eve': bracket + t.i(inputs, Var.X, Var.Z),
    }
    return make_bounds(Origin.LEMMA1, rates, tol)


def _require_invertible(model, tol):
    if classify_function(model, tol) is not FunctionClass.INVERTIBLE:
        raise PreconditionError(Check.NOT_INVERTIBLE)


def _invertible_common(t):
    # Storage and decoder-privacy bounds shared by the invertible lemmas
    return {
        'r_w1': t.h(Var.X1, (Var.X2, Var.Y)),
        'r_w2': t.h(Var.X2, (Var.X1, Var.Y)),
        'r_w_sum': t.h(_XT, Var.Y),
        'r_l_dec': t.i(_XT, Var.X, Var.Y),
    }


def constant_q_channel(model):
    """Constant time-sharing variable driven by (X1, X2)."""
    return Channel.constant(
        (model.x1, model.x2), Alphabet.indexed(Var.Q, 1))


def eval_lemma2(model, q_channel=None, tol=DEFAULT_TOLERANCES):
    """Inner bound for an invertible function.

    Args:
        model: SourceModel with invertible f
        q_channel: optional Channel (X1, X2) -> Q with |Q| <= 2; constant Q
            when omitted
        tol: Tolerances
    Returns:
        RateBounds tagged lemma2
    """
    _require_invertible(model, tol)
    if q_channel is None:
        q_channel = constant_q_channel(model)
    names = tuple(a.name for a in q_channel.from_axes + q_channel.to_axes)
    if names != (Var.X1, Var.X2, Var.Q):
        raise PreconditionError(
            Check.ALPHABET_MISMATCH, f'Q channel over {names}.')
    if q_channel.to_axes[0].size > 2:
        raise PreconditionError(Check.Q_CARDINALITY)

    t = _Terms(compose(build_joint(model), q_channel), tol)
    bracket = neg_part(t.i(_XT, Var.Z, Var.Q) - t.i(_XT, Var.Y, Var.Q))
    rates = _invertible_common(t) | {
        'r_s': bracket + t.h(_XT, Var.Z),
        'r_l_eve': bracket + t.i(_XT, Var.X, Var.Z),
    }
    return make_bounds(Origin.LEMMA2, rates, tol)


def eval_lemma3(model, tol=DEFAULT_TOLERANCES):
    """Inner bound for an invertible function when Eve's channel is degraded."""
    _require_invertible(model, tol)
    if not check_degradedness(model, tol).eve_degraded:
        raise PreconditionError(Check.NOT_EVE_DEGRADED)
    t = _Terms(build_joint(model), tol)
    rates = _invertible_common(t) | {
        'r_s': t.h(_XT, Var.Y),
        'r_l_eve': t.i(_XT, Var.X, Var.Y),
    }
    return make_bounds(Origin.LEMMA3, rates, tol)


def eval_lemma4(model, tol=DEFAULT_TOLERANCES):
    """Inner bound for an invertible function when the fusion center's
    channel is degraded."""
    _require_invertible(model, tol)
    if not check_degradedness(model, tol).fusion_degraded:
        raise PreconditionError(Check.NOT_FUSION_DEGRADED)
    t = _Terms(build_joint(model), tol)
    rates = _invertible_common(t) | {
        'r_s': t.h(_XT, Var.Z),
        'r_l_eve': t.i(_XT, Var.X, Var.Z),
    }
    return make_bounds(Origin.LEMMA4, rates, tol)


def corner_points(model, aux, tol=DEFAULT_TOLERANCES):
    """Storage corner points of the two successive decoding orders.

    Order 1-2 decodes V1, V2, U1, U2; order 2-1 swaps the transmitters.
    Non-storage bounds are shared.

    Returns:
        tuple of CornerPoint (order_12, order_21)
    """
    _require_admissible(model, aux, tol)
    joint = induced_joint(model, aux)
    t = _Terms(joint, tol)
    base = inner_rates(joint, tol)
    y = Var.Y

    order_12 = base | {
        'r_w1': t.i(Var.V1, Var.X1, y) + t.i(Var.U1, Var.X1, _V + (y,)),
        'r_w2': t.i(Var.V2, Var.X2, (Var.V1, y))
            + t.i(Var.U2, Var.X2, (Var.U1, Var.V2, y)),
    }
    order_21 = base | {
        'r_w1': t.i(Var.V1, Var.X1, (Var.V2, y))
            + t.i(Var.U1, Var.X1, (Var.U2, Var.V1, y)),
        'r_w2': t.i(Var.V2, Var.X2, y) + t.i(Var.U2, Var.X2, _V + (y,)),
        'r_w_sum': t.i(Var.U1, Var.X1, (Var.U2, Var.V1, y))
            + t.i(Var.U2, Var.X2, _V + (y,))
            + t.i(Var.V1, Var.X1, (Var.V2, y))
            + t.i(Var.V2, Var.X2, y),
    }
    return (
        CornerPoint(
            CornerOrder.ORDER_12, make_bounds(Origin.THM1_INNER, order_12, tol)),
        CornerPoint(
            CornerOrder.ORDER_21, make_bounds(Origin.THM1_INNER, order_21, tol)),
    )


def _q_candidates(model, samples, rng):
    q = Alphabet.indexed(Var.Q, 2)
    inputs = (model.x1, model.x2)
    shape = (model.x1.size, model.x2.size)
    yield constant_q_channel(model)
    n_pairs = int(np.prod(shape))
    if n_pairs <= MAX_ENUMERATED_PAIRS:
        for labels in range(1, 2 ** n_pairs - 1):
            table = (labels >> np.arange(n_pairs)) & 1
            yield Channel.deterministic(inputs, q, table.reshape(shape))
    for _ in range(samples):
        yield Channel(inputs, (q,), rng.dirichlet(np.ones(2), size=shape))


def best_lemma2_q(model, samples=DEFAULT_Q_SAMPLES, seed=0,
                  tol=DEFAULT_TOLERANCES):
    """Search binary time-sharing channels (X1, X2) -> Q for Lemma 2.

    Only the bracket depends on Q, so the smallest R_s also gives the
    smallest R_l,Eve. Deterministic labelings are tried first, then random
    channels; the first minimum wins.

    Args:
        model: SourceModel with invertible f
        samples: number of random channels
        seed: random seed
        tol: Tolerances
    Returns:
        tuple of (best Q channel, RateBounds)
    """
    rng = np.random.default_rng(seed)
    best = None
    for channel in _q_candidates(model, samples, rng):
        bounds = eval_lemma2(model, channel, tol)
        if best is None or bounds.r_s < best[1].r_s:
            best = (channel, bounds)
    logger.info('Best Lemma 2 time-sharing gives R_s >= %.6f', best[1].r_s)
    return best
