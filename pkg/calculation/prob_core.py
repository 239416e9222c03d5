"""Exact discrete probability and information calculus.

Distributions are dense numpy tensors with one axis per named finite
variable. Variables are looked up by name, so callers never depend on axis
order. All logarithms are base 2 and every information quantity is reported
in bits.

Information quantities in [-tol.num, 0) are reported as exactly 0; anything
further below zero raises ConsistencyError instead of being clamped.
"""

import logging
import string
from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr

from calculation.errors import ConsistencyError

logger = logging.getLogger(__name__)

# Entries below this are exact zeros in log computations
ZERO_MASS = 1e-15
_LN2 = np.log(2.0)
# Einsum subscripts, enough for any joint used here
_SUBSCRIPTS = string.ascii_letters

# Information quantities are plain floats in bits
Bits = float


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances.

    Attributes:
        num: information-identity tolerance (clamping window below zero)
        norm: normalization tolerance for distributions and channel rows
        adm: admissibility tolerance on H(f|U1,U2,Y,Q)
    """
    num: float = 1e-9
    norm: float = 1e-12
    adm: float = 1e-9


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class Alphabet:
    """Named finite alphabet with ordered, unique symbol labels."""
    name: str
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, 'name', str(self.name))
        object.__setattr__(self, 'symbols', tuple(self.symbols))
        if not self.symbols:
            raise ValueError(f'Alphabet {self.name} has no symbols.')
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f'Alphabet {self.name} has duplicate symbols.')

    @property
    def size(self):
        return len(self.symbols)

    def index(self, symbol):
        """Position of a symbol label in the alphabet."""
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise ValueError(
                f'Symbol {symbol!r} not in alphabet {self.name}.') from None

    def renamed(self, name):
        return Alphabet(name, self.symbols)

    @classmethod
    def indexed(cls, name, size):
        """Alphabet whose symbols are the integers 0..size-1."""
        return cls(name, tuple(range(size)))


def _check_mass(label, mass):
    if not np.all(np.isfinite(mass)):
        raise ValueError(f'{label} has non-finite entries.')
    if np.any(mass < 0):
        bad = np.unravel_index(np.argmin(mass), mass.shape)
        raise ValueError(
            f'{label} entry {tuple(int(i) for i in bad)} is negative '
            f'({mass[bad]:.6g}).')


@dataclass(frozen=True, eq=False)
class JointDist:
    """Probability mass function over named finite variables.

    Attributes:
        axes: tuple of Alphabet, one per tensor axis
        mass: read-only tensor of probabilities indexed by symbol positions
        tol_norm: normalization tolerance used when validating mass
    """
    axes: tuple
    mass: np.ndarray
    tol_norm: float = field(default=DEFAULT_TOLERANCES.norm, repr=False)

    def __post_init__(self):
        axes = tuple(self.axes)
        mass = np.array(self.mass, dtype=float)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ValueError(f'Duplicate axis names in {names}.')
        if mass.shape != tuple(a.size for a in axes):
            raise ValueError(
                f'Mass shape {mass.shape} does not match axes {names}.')
        _check_mass('Distribution', mass)
        if abs(mass.sum() - 1.0) > self.tol_norm:
            raise ValueError(
                f'Distribution over {names} sums to {mass.sum():.15g}.')
        mass.flags.writeable = False
        object.__setattr__(self, 'axes', axes)
        object.__setattr__(self, 'mass', mass)
        # Memo of entropies keyed by sorted axis positions
        object.__setattr__(self, '_entropies', {})

    @property
    def names(self):
        return tuple(a.name for a in self.axes)

    def position(self, name):
        """Axis position of a variable name."""
        try:
            return self.names.index(str(name))
        except ValueError:
            raise ValueError(
                f'Unknown variable {name!r}; axes are {self.names}.') from None

    def axis(self, name):
        return self.axes[self.position(name)]

    def tensor(self, names):
        """Marginal mass with axes in the given name order."""
        positions = [self.position(n) for n in as_names(names)]
        if len(set(positions)) != len(positions):
            raise ValueError('Repeated variable in tensor request.')
        kept = sorted(positions)
        drop = tuple(i for i in range(len(self.axes)) if i not in kept)
        mass = self.mass.sum(axis=drop) if drop else self.mass
        return np.transpose(mass, [kept.index(p) for p in positions])

    def entropy_at(self, positions):
        """Entropy in bits of the marginal on sorted axis positions."""
        if not positions:
            return 0.0
        cached = self._entropies.get(positions)
        if cached is None:
            drop = tuple(i for i in range(len(self.axes)) if i not in positions)
            p = self.mass.sum(axis=drop).ravel() if drop else self.mass.ravel()
            p = np.where(p < ZERO_MASS, 0.0, p)
            cached = float(entr(p).sum() / _LN2)
            self._entropies[positions] = cached
        return cached

    @classmethod
    def point(cls, axes, symbols):
        """Point mass on one symbol per axis."""
        mass = np.zeros(tuple(a.size for a in axes))
        mass[tuple(a.index(s) for a, s in zip(axes, symbols))] = 1.0
        return cls(tuple(axes), mass)

    @classmethod
    def product(cls, *dists):
        """Joint of mutually independent distributions."""
        subs, start = [], 0
        for d in dists:
            subs.append(_SUBSCRIPTS[start:start + len(d.axes)])
            start += len(d.axes)
        mass = np.einsum(
            ','.join(subs) + '->' + ''.join(subs), *[d.mass for d in dists])
        return cls(sum((d.axes for d in dists), ()), mass)


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic conditional distribution between named variables.

    Attributes:
        from_axes: conditioning alphabets
        to_axes: output alphabets
        kernel: tensor of shape from sizes + to sizes, each slice over the
            output axes sums to one
    """
    from_axes: tuple
    to_axes: tuple
    kernel: np.ndarray
    tol_norm: float = field(default=DEFAULT_TOLERANCES.norm, repr=False)

    def __post_init__(self):
        from_axes, to_axes = tuple(self.from_axes), tuple(self.to_axes)
        kernel = np.array(self.kernel, dtype=float)
        from_shape = tuple(a.size for a in from_axes)
        to_shape = tuple(a.size for a in to_axes)
        if kernel.shape != from_shape + to_shape:
            raise ValueError(
                f'Kernel shape {kernel.shape} does not match '
                f'{from_shape} -> {to_shape}.')
        _check_mass('Channel kernel', kernel)
        sums = kernel.reshape(int(np.prod(from_shape)), -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > self.tol_norm)
        if bad.size:
            row = tuple(int(i) for i in np.unravel_index(bad[0], from_shape))
            raise ValueError(
                f'Channel row {row} sums to {sums[bad[0]]:.15g}.')
        kernel.flags.writeable = False
        object.__setattr__(self, 'from_axes', from_axes)
        object.__setattr__(self, 'to_axes', to_axes)
        object.__setattr__(self, 'kernel', kernel)

    @classmethod
    def identity(cls, source, name):
        """Noiseless copy of `source` onto a new variable `name`."""
        return cls((source,), (source.renamed(name),), np.eye(source.size))

    @classmethod
    def deterministic(cls, from_axes, target, table):
        """Channel applying a function given as a table of symbol positions.

        Args:
            from_axes: input alphabets
            target: output alphabet
            table: integer array of shape from sizes with output positions
        """
        return cls(
            tuple(from_axes), (target,), np.eye(target.size)[np.asarray(table)])

    @classmethod
    def constant(cls, from_axes, target, symbol_index=0):
        """Channel whose output is a fixed symbol."""
        shape = tuple(a.size for a in from_axes)
        return cls.deterministic(
            from_axes, target, np.full(shape, symbol_index, dtype=int))


def as_names(variables):
    """Normalize a variable name or iterable of names to a tuple."""
    # A lone string (or Var member) is one variable, not a sequence of chars
    if isinstance(variables, str):
        return (variables,)
    return tuple(str(v) for v in variables)


def _resolve(dist, variables, allow_empty=False):
    names = as_names(variables)
    if not names and not allow_empty:
        raise ValueError('Variable set is empty.')
    return tuple(sorted({dist.position(n) for n in names}))


def _disjoint(*groups):
    seen = set()
    for group in groups:
        if seen & set(group):
            raise ValueError('Variable sets overlap.')
        seen |= set(group)


def _checked(value, tol):
    if value < -tol.num:
        raise ConsistencyError(
            f'Information quantity {value:.6g} below -{tol.num:g}.')
    return max(float(value), 0.0)


def entropy(dist, variables, tol=DEFAULT_TOLERANCES):
    """Entropy H(variables) in bits.

    Args:
        dist: JointDist
        variables: variable name or iterable of names, nonempty
        tol: Tolerances
    Returns:
        entropy of the marginal on `variables`
    """
    return _checked(dist.entropy_at(_resolve(dist, variables)), tol)


def conditional_entropy(dist, variables, given=(), tol=DEFAULT_TOLERANCES):
    """Conditional entropy H(variables|given) in bits."""
    a = _resolve(dist, variables)
    g = _resolve(dist, given, allow_empty=True)
    _disjoint(a, g)
    return _checked(
        dist.entropy_at(tuple(sorted(a + g))) - dist.entropy_at(g), tol)


def mutual_information(dist, a, b, given=(), tol=DEFAULT_TOLERANCES):
    """Conditional mutual information I(a;b|given) in bits.

    Args:
        dist: JointDist
        a: first variable set
        b: second variable set
        given: conditioning variable set, possibly empty
        tol: Tolerances
    Returns:
        mutual information, clamped to 0 inside the tolerance window
    """
    pa = _resolve(dist, a)
    pb = _resolve(dist, b)
    pg = _resolve(dist, given, allow_empty=True)
    _disjoint(pa, pb, pg)
    # Symmetric in a and b term by term, so I(a;b|g) == I(b;a|g) exactly
    value = (
        dist.entropy_at(tuple(sorted(pa + pg)))
        + dist.entropy_at(tuple(sorted(pb + pg)))
    ) - (
        dist.entropy_at(tuple(sorted(pa + pb + pg)))
        + dist.entropy_at(pg)
    )
    return _checked(value, tol)


def marginalize(dist, keep):
    """Marginal distribution on `keep`, axes kept in their original order."""
    positions = _resolve(dist, keep)
    drop = tuple(i for i in range(len(dist.axes)) if i not in positions)
    mass = dist.mass.sum(axis=drop) if drop else np.array(dist.mass)
    return JointDist(
        tuple(dist.axes[i] for i in positions), mass / mass.sum(),
        dist.tol_norm)


def compose(base, channel):
    """Extend a joint by a channel from some of its variables.

    Args:
        base: JointDist containing every conditioning variable
        channel: Channel whose outputs are new variables
    Returns:
        JointDist over base axes followed by channel outputs, with mass
        p(base) * k(outputs|conditioning)
    """
    names = base.names
    for a in channel.to_axes:
        if a.name in names:
            raise ValueError(f'Variable {a.name} already in the joint.')
    for a in channel.from_axes:
        if a.name not in names:
            raise ValueError(f'Conditioning variable {a.name} missing.')
        if base.axis(a.name).size != a.size:
            raise ValueError(f'Alphabet size mismatch on {a.name}.')

    base_sub = _SUBSCRIPTS[:len(base.axes)]
    from_sub = ''.join(base_sub[base.position(a.name)] for a in channel.from_axes)
    to_sub = _SUBSCRIPTS[len(base.axes):len(base.axes) + len(channel.to_axes)]
    mass = np.einsum(
        f'{base_sub},{from_sub}{to_sub}->{base_sub}{to_sub}',
        base.mass, channel.kernel)
    return JointDist(base.axes + channel.to_axes, mass, base.tol_norm)


def neg_part(a):
    """[a]^- = min(a, 0)."""
    return min(float(a), 0.0)


def binary_entropy(c):
    """Binary entropy function Hb(c) in bits."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f'Binary entropy argument {c} outside [0, 1].')
    return float((entr(c) + entr(1.0 - c)) / _LN2)
