"""Problem instance for two-transmitter secure function computation.

A remote source X is observed through memoryless channels by two
transmitters (X1, X2), the fusion center (Y) and the eavesdropper (Z). The
fusion center wants f(X1, X2, Y) letter by letter. This module builds the
single-letter joint distribution, the auxiliary-variable system used by the
region bounds, and the structural checks (invertibility, degradedness,
admissibility, Markov chains) that decide which bounds apply.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from calculation._compat import StrEnum

import numpy as np
import orjson

from calculation.errors import Check, PreconditionError
from calculation.prob_core import (
    DEFAULT_TOLERANCES, Alphabet, Channel, JointDist, as_names, compose,
    conditional_entropy, mutual_information)

logger = logging.getLogger(__name__)

# Default time-sharing cardinality for generated auxiliary systems
DEFAULT_Q_SIZE = 1
# Decimal places kept when fingerprinting auxiliary systems
FINGERPRINT_DECIMALS = 12
BINARY = ('0', '1')


class Var(StrEnum):
    """Variable names used as distribution axes."""
    Q = 'Q'
    V1 = 'V1'
    V2 = 'V2'
    U1 = 'U1'
    U2 = 'U2'
    X1 = 'X1'
    X2 = 'X2'
    X = 'X'
    Y = 'Y'
    Z = 'Z'
    F = 'F'
    F_HAT = 'F_hat'


class FunctionClass(StrEnum):
    """Invertibility classes of the target function."""
    INVERTIBLE = 'invertible'
    PARTIALLY_INVERTIBLE_WRT_1 = 'partially_invertible_wrt_1'
    PARTIALLY_INVERTIBLE_WRT_2 = 'partially_invertible_wrt_2'
    GENERAL = 'general'

    def partially_invertible(self, wrt):
        """Whether X_wrt is recoverable from (f, Y)."""
        return self in (
            FunctionClass.INVERTIBLE,
            FunctionClass(f'partially_invertible_wrt_{wrt}'))


@dataclass(frozen=True, eq=False)
class Distortion:
    """Per-letter distortion metric d(f, f_hat).

    Attributes:
        f_hat: reconstruction alphabet
        d: nonnegative table of shape (|F|, |F_hat|)
    """
    f_hat: Alphabet
    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[1] != self.f_hat.size:
            raise ValueError(
                f'Distortion table shape {d.shape} does not match '
                f'|F_hat| = {self.f_hat.size}.')
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError('Distortion table must be finite and >= 0.')
        d.flags.writeable = False
        object.__setattr__(self, 'd', d)

    @classmethod
    def hamming(cls, f_alphabet):
        """Hamming distortion with reconstructions in the function alphabet."""
        return cls(f_alphabet.renamed(Var.F_HAT), 1.0 - np.eye(f_alphabet.size))


@dataclass(frozen=True, eq=False)
class SourceModel:
    """Source, measurement channels, target function and distortion.

    Attributes:
        p_x: distribution of the remote source over axis X
        ch1: channel X -> X1
        ch2: channel X -> X2
        ch_yz: channel X -> (Y, Z)
        f_alphabet: alphabet of the function output F
        f_table: integer table (|X1|, |X2|, |Y|) of F symbol positions
        distortion: optional Distortion
    """
    p_x: JointDist
    ch1: Channel
    ch2: Channel
    ch_yz: Channel
    f_alphabet: Alphabet
    f_table: np.ndarray
    distortion: Distortion = None

    def __post_init__(self):
        expected = {
            'p_x': (self.p_x.names, (Var.X,)),
            'ch1': (_channel_names(self.ch1), ((Var.X,), (Var.X1,))),
            'ch2': (_channel_names(self.ch2), ((Var.X,), (Var.X2,))),
            'ch_yz': (_channel_names(self.ch_yz), ((Var.X,), (Var.Y, Var.Z))),
        }
        for label, (found, wanted) in expected.items():
            if found != wanted:
                raise ValueError(f'{label} has variables {found}, not {wanted}.')
        for ch in (self.ch1, self.ch2, self.ch_yz):
            if ch.from_axes[0] != self.x:
                raise ValueError('Channel input alphabet differs from X.')

        table = np.array(self.f_table, dtype=int)
        shape = (self.x1.size, self.x2.size, self.y.size)
        if table.shape != shape:
            raise ValueError(f'f table shape {table.shape}, expected {shape}.')
        if table.min() < 0 or table.max() >= self.f_alphabet.size:
            raise ValueError('f table references undeclared F symbols.')
        table.flags.writeable = False
        object.__setattr__(self, 'f_table', table)

        if (self.distortion is not None
                and self.distortion.d.shape[0] != self.f_alphabet.size):
            raise ValueError('Distortion table rows must match |F|.')

    @property
    def x(self):
        return self.p_x.axes[0]

    @property
    def x1(self):
        return self.ch1.to_axes[0]

    @property
    def x2(self):
        return self.ch2.to_axes[0]

    @property
    def y(self):
        return self.ch_yz.to_axes[0]

    @property
    def z(self):
        return self.ch_yz.to_axes[1]

    @classmethod
    def from_arrays(cls, alphabets, p_x, ch1, ch2, ch_yz, f_table,
                    distortion=None, tol=DEFAULT_TOLERANCES):
        """Build a model from symbol lists and nested arrays.

        Args:
            alphabets: dict of variable name (X, X1, X2, Y, Z, F) to symbols
            p_x: array (|X|,)
            ch1: array (|X|, |X1|)
            ch2: array (|X|, |X2|)
            ch_yz: array (|X|, |Y|, |Z|)
            f_table: integer array (|X1|, |X2|, |Y|) of F symbol positions
            distortion: optional (f_hat symbols, d array) pair
            tol: Tolerances
        Returns:
            SourceModel
        """
        a = {str(k): Alphabet(k, v) for k, v in alphabets.items()}
        x = a[Var.X]
        dist = None
        if distortion is not None:
            f_hat_symbols, d = distortion
            dist = Distortion(Alphabet(Var.F_HAT, f_hat_symbols), d)
        return cls(
            p_x=JointDist((x,), p_x, tol.norm),
            ch1=Channel((x,), (a[Var.X1],), ch1, tol.norm),
            ch2=Channel((x,), (a[Var.X2],), ch2, tol.norm),
            ch_yz=Channel((x,), (a[Var.Y], a[Var.Z]), ch_yz, tol.norm),
            f_alphabet=a[Var.F],
            f_table=f_table,
            distortion=dist
        )


def _channel_names(ch):
    return (
        tuple(a.name for a in ch.from_axes), tuple(a.name for a in ch.to_axes))


@dataclass(frozen=True)
class DegradednessReport:
    """Degradedness of the fusion-center/eavesdropper channel P_{YZ|X}."""
    eve_degraded: bool
    fusion_degraded: bool
    residual_eve: float
    residual_fusion: float


@dataclass(frozen=True, eq=False)
class AuxSystem:
    """Auxiliary variables (Q, V1, V2, U1, U2) as time-shared channels.

    Q is an explicit time-sharing variable: every branch q carries its own
    complete set of channels U1|X1, V1|U1, U2|X2, V2|U2.

    Attributes:
        weights: array (|Q|,) of time-sharing weights
        u1: array (|Q|, |X1|, |U1|)
        v1: array (|Q|, |U1|, |V1|)
        u2: array (|Q|, |X2|, |U2|)
        v2: array (|Q|, |U2|, |V2|)
    """
    weights: np.ndarray
    u1: np.ndarray
    v1: np.ndarray
    u2: np.ndarray
    v2: np.ndarray
    tol_norm: float = field(default=DEFAULT_TOLERANCES.norm, repr=False)

    KERNELS = ('u1', 'v1', 'u2', 'v2')

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1 or np.any(weights < 0) \
                or abs(weights.sum() - 1.0) > self.tol_norm:
            raise ValueError('Time-sharing weights must form a distribution.')
        weights.flags.writeable = False
        object.__setattr__(self, 'weights', weights)

        for name in self.KERNELS:
            k = np.array(getattr(self, name), dtype=float)
            if k.ndim != 3 or k.shape[0] != weights.size:
                raise ValueError(
                    f'Kernel {name} must have shape (|Q|, inputs, outputs).')
            if np.any(k < 0):
                raise ValueError(f'Kernel {name} has negative entries.')
            bad = np.argwhere(np.abs(k.sum(axis=2) - 1.0) > self.tol_norm)
            if bad.size:
                raise ValueError(
                    f'Kernel {name} row {tuple(int(i) for i in bad[0])} is '
                    'not stochastic.')
            k.flags.writeable = False
            object.__setattr__(self, name, k)

        if self.v1.shape[1] != self.u1.shape[2] \
                or self.v2.shape[1] != self.u2.shape[2]:
            raise ValueError('V channels must take U alphabets as inputs.')

    @property
    def q_size(self):
        return self.weights.size

    @property
    def sizes(self):
        """Cardinalities as a dict keyed by variable name."""
        return {
            Var.Q: self.q_size, Var.U1: self.u1.shape[2],
            Var.V1: self.v1.shape[2], Var.U2: self.u2.shape[2],
            Var.V2: self.v2.shape[2]
        }

    def alphabets(self):
        return {name: Alphabet.indexed(name, size)
                for name, size in self.sizes.items()}

    def channels(self, model):
        """Channels U1|(Q,X1), V1|(Q,U1), U2|(Q,X2), V2|(Q,U2) for a model."""
        if self.u1.shape[1] != model.x1.size or self.u2.shape[1] != model.x2.size:
            raise PreconditionError(
                Check.ALPHABET_MISMATCH,
                f'aux inputs ({self.u1.shape[1]}, {self.u2.shape[1]}) vs '
                f'model ({model.x1.size}, {model.x2.size}).')
        a = self.alphabets()
        q = a[Var.Q]
        return [
            Channel((q, model.x1), (a[Var.U1],), self.u1, self.tol_norm),
            Channel((q, a[Var.U1]), (a[Var.V1],), self.v1, self.tol_norm),
            Channel((q, model.x2), (a[Var.U2],), self.u2, self.tol_norm),
            Channel((q, a[Var.U2]), (a[Var.V2],), self.v2, self.tol_norm),
        ]

    def to_dict(self):
        return {'weights': self.weights.tolist()} | {
            name: getattr(self, name).tolist() for name in self.KERNELS}

    @classmethod
    def from_dict(cls, data, tol=DEFAULT_TOLERANCES):
        return cls(**{k: data[k] for k in ('weights',) + cls.KERNELS},
                   tol_norm=tol.norm)

    def fingerprint(self):
        """Stable hash of the rounded channel values."""
        rounded = {k: np.round(np.asarray(v), FINGERPRINT_DECIMALS) + 0.0
                   for k, v in self.to_dict().items()}
        payload = orjson.dumps(
            rounded, option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS)
        return hashlib.sha256(payload).hexdigest()

    @classmethod
    def identity(cls, model, q_size=DEFAULT_Q_SIZE):
        """U1 = X1, U2 = X2, constant V1 and V2."""
        n1, n2 = model.x1.size, model.x2.size
        return cls(
            weights=np.full(q_size, 1.0 / q_size),
            u1=np.tile(np.eye(n1), (q_size, 1, 1)),
            v1=np.ones((q_size, n1, 1)),
            u2=np.tile(np.eye(n2), (q_size, 1, 1)),
            v2=np.ones((q_size, n2, 1))
        )

    @classmethod
    def constant(cls, model):
        """All auxiliary variables constant."""
        return cls(
            weights=np.ones(1),
            u1=np.ones((1, model.x1.size, 1)),
            v1=np.ones((1, 1, 1)),
            u2=np.ones((1, model.x2.size, 1)),
            v2=np.ones((1, 1, 1))
        )

    @classmethod
    def random(cls, model, sizes, rng):
        """Auxiliary system with Dirichlet(1) rows.

        Args:
            model: SourceModel
            sizes: dict of cardinalities keyed by Var (Q, U1, V1, U2, V2)
            rng: numpy Generator
        """
        q = sizes[Var.Q]
        def rows(n_in, n_out):
            return rng.dirichlet(np.ones(n_out), size=(q, n_in))

        return cls(
            weights=rng.dirichlet(np.ones(q)),
            u1=rows(model.x1.size, sizes[Var.U1]),
            v1=rows(sizes[Var.U1], sizes[Var.V1]),
            u2=rows(model.x2.size, sizes[Var.U2]),
            v2=rows(sizes[Var.U2], sizes[Var.V2])
        )


def build_joint(model):
    """Single-letter joint over (X, X1, X2, Y, Z).

    Args:
        model: SourceModel
    Returns:
        JointDist with mass P_X P_{X1|X} P_{X2|X} P_{YZ|X}
    """
    joint = compose(model.p_x, model.ch1)
    joint = compose(joint, model.ch2)
    return compose(joint, model.ch_yz)


def function_joint(model):
    """Joint over (X, X1, X2, Y, Z) extended by the deterministic F axis."""
    return compose(build_joint(model), _function_channel(model))


def _function_channel(model):
    return Channel.deterministic(
        (model.x1, model.x2, model.y), model.f_alphabet, model.f_table)


def induced_joint(model, aux, with_function=False):
    """Joint over (Q, X, X1, X2, Y, Z, U1, V1, U2, V2[, F]).

    Args:
        model: SourceModel
        aux: AuxSystem
        with_function: also append the deterministic F axis
    Returns:
        JointDist induced by time-sharing the auxiliary channels
    """
    q = Alphabet.indexed(Var.Q, aux.q_size)
    base = function_joint(model) if with_function else build_joint(model)
    joint = JointDist.product(JointDist((q,), aux.weights), base)
    for ch in aux.channels(model):
        joint = compose(joint, ch)
    return joint


def bernoulli_example_model(beta1, beta2, alpha, q):
    """Binary model with multiplicative Bernoulli measurement noise.

    X1 = S1*X, X2 = S2*X, Z = SZ*X and Y = SY*X with P_X(1) = 0.5,
    P_S1(1) = beta1, P_S2(1) = beta2 and P_{SZ,SY} putting 1-q on (0,0),
    q*alpha on (1,1) and q*(1-alpha) on (1,0). The target function is the
    invertible pair f = (x1, x2).

    Args:
        beta1: P(S1 = 1)
        beta2: P(S2 = 1)
        alpha: P(SY = 1 | SZ = 1)
        q: P(SZ = 1)
    Returns:
        SourceModel
    """
    for label, value in (('beta1', beta1), ('beta2', beta2),
                         ('alpha', alpha), ('q', q)):
        if not 0.0 <= value <= 1.0:
            raise PreconditionError(
                Check.BAD_ARGUMENT, f'{label} = {value} outside [0, 1].')

    ch_yz = np.zeros((2, 2, 2))
    ch_yz[0, 0, 0] = 1.0
    ch_yz[1, 0, 0] = 1.0 - q
    ch_yz[1, 1, 1] = q * alpha
    ch_yz[1, 0, 1] = q * (1.0 - alpha)

    pairs = tuple(a + b for a in BINARY for b in BINARY)
    f_table = np.array([[[2 * a + b] * 2 for b in range(2)] for a in range(2)])
    return SourceModel.from_arrays(
        alphabets={Var.X: BINARY, Var.X1: BINARY, Var.X2: BINARY,
                   Var.Y: BINARY, Var.Z: BINARY, Var.F: pairs},
        p_x=[0.5, 0.5],
        ch1=[[1.0, 0.0], [1.0 - beta1, beta1]],
        ch2=[[1.0, 0.0], [1.0 - beta2, beta2]],
        ch_yz=ch_yz,
        f_table=f_table
    )


def function_residuals(model, tol=DEFAULT_TOLERANCES):
    """Invertibility residuals of the target function.

    Returns:
        dict with H(X1,X2|F,Y), H(X1|F,Y) and H(X2|F,Y)
    """
    joint = function_joint(model)
    given = (Var.F, Var.Y)
    return {
        'H(X1,X2|F,Y)': conditional_entropy(
            joint, (Var.X1, Var.X2), given, tol),
        'H(X1|F,Y)': conditional_entropy(joint, Var.X1, given, tol),
        'H(X2|F,Y)': conditional_entropy(joint, Var.X2, given, tol),
    }


def classify_function(model, tol=DEFAULT_TOLERANCES):
    """Classify the target function by invertibility given Y.

    Only input triples with positive probability matter, since the checks
    are conditional entropies on the joint.
    """
    both, first, second = function_residuals(model, tol).values()
    if both <= tol.num:
        return FunctionClass.INVERTIBLE
    if first <= tol.num:
        return FunctionClass.PARTIALLY_INVERTIBLE_WRT_1
    if second <= tol.num:
        return FunctionClass.PARTIALLY_INVERTIBLE_WRT_2
    return FunctionClass.GENERAL


def check_degradedness(model, tol=DEFAULT_TOLERANCES):
    """Test both degradedness orders of P_{YZ|X} on the joint.

    Degradedness is read as conditional independence: Eve's channel is
    degraded when X - Y - Z (I(X;Z|Y) = 0), the fusion center's when
    X - Z - Y (I(X;Y|Z) = 0).
    """
    joint = build_joint(model)
    residual_eve = mutual_information(joint, Var.X, Var.Z, Var.Y, tol)
    residual_fusion = mutual_information(joint, Var.X, Var.Y, Var.Z, tol)
    return DegradednessReport(
        eve_degraded=residual_eve <= tol.num,
        fusion_degraded=residual_fusion <= tol.num,
        residual_eve=residual_eve,
        residual_fusion=residual_fusion
    )


def check_admissible(model, aux, tol=DEFAULT_TOLERANCES):
    """Check admissibility of (U1, U2) for the target function.

    The residual H(f|U1,U2,Y,Q) conditions on Q because a time-shared system
    must be admissible in every branch. The measurement chains
    U1 - X1 - (X2, Y) and U2 - X2 - (X1, Y) are verified per branch too.

    Args:
        model: SourceModel
        aux: AuxSystem
        tol: Tolerances
    Returns:
        tuple of (admissible flag, residual in bits)
    """
    joint = induced_joint(model, aux, with_function=True)
    residual = conditional_entropy(
        joint, Var.F, (Var.U1, Var.U2, Var.Y, Var.Q), tol)
    chains = max(
        mutual_information(joint, Var.U1, (Var.X2, Var.Y), (Var.X1, Var.Q), tol),
        mutual_information(joint, Var.U2, (Var.X1, Var.Y), (Var.X2, Var.Q), tol))
    return residual <= tol.adm and chains <= tol.num, residual


def verify_markov(joint, chain, given=(), tol=DEFAULT_TOLERANCES):
    """Largest conditional dependence along a Markov chain.

    For the chain A_1 - A_2 - ... - A_k this returns the maximum over interior
    positions i of I(A_1..A_{i-1}; A_{i+1}..A_k | A_i, given). For three
    sets this is I(A;C|B); a value within tolerance certifies the chain.

    Args:
        joint: JointDist
        chain: ordered list of variable sets, at least three
        given: optional extra conditioning set (e.g. Q for per-branch chains)
        tol: Tolerances
    Returns:
        worst residual in bits
    """
    groups = [as_names(group) for group in chain]
    if len(groups) < 3:
        raise ValueError('A Markov chain needs at least three sets.')
    flat = [name for group in groups for name in group] + list(as_names(given))
    if len(set(flat)) != len(flat):
        raise ValueError('Markov chain sets overlap.')

    worst = 0.0
    for i in range(1, len(groups) - 1):
        past = sum(groups[:i], ())
        future = sum(groups[i + 1:], ())
        worst = max(worst, mutual_information(
            joint, past, future, groups[i] + as_names(given), tol))
    return worst


# Outer-bound Markov chains (Q,V1)-U1-X1-X-(X2,Y,Z) and its mirror
OUTER_CHAIN_1 = (
    (Var.Q, Var.V1), Var.U1, Var.X1, Var.X, (Var.X2, Var.Y, Var.Z))
OUTER_CHAIN_2 = (
    (Var.Q, Var.V2), Var.U2, Var.X2, Var.X, (Var.X1, Var.Y, Var.Z))
# Same chains inside one time-sharing branch (condition on Q)
BRANCH_CHAIN_1 = (Var.V1, Var.U1, Var.X1, Var.X, (Var.X2, Var.Y, Var.Z))
BRANCH_CHAIN_2 = (Var.V2, Var.U2, Var.X2, Var.X, (Var.X1, Var.Y, Var.Z))
