"""Random-restart search over auxiliary systems.

The inner bounds are unions over all auxiliary systems. This module samples
that union: each restart runs a coordinate descent on a scalarized bound
vector, perturbing one channel row at a time, and every candidate it visits
is offered to a Pareto front. The identity system (U_i = X_i, V_i constant)
and the all-constant system are always offered as well.

Restarts draw from numpy generators seeded by (seed, restart index) and are
merged in restart order, so a front depends only on the model and the
configuration, never on the worker count.
"""

import logging
from dataclasses import dataclass, field
from calculation._compat import StrEnum

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from calculation.errors import Check, ConsistencyError, PreconditionError
from calculation.model import AuxSystem, Var, check_admissible, induced_joint
from calculation.prob_core import DEFAULT_TOLERANCES, conditional_entropy
from calculation.regions import (
    RATE_FIELDS, Origin, RateBounds, eval_inner_lossy, inner_rates,
    make_bounds)

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 8
DEFAULT_ITERATIONS = 60
DEFAULT_SCALE = 0.3
DEFAULT_PENALTY = 10.0
DEFAULT_V_SIZE = 2
MAX_Q_SIZE = 2
# Cardinality caps are |X_i| + offset for V_i and its square for U_i
CAP_OFFSETS = {'lossless': 6, 'lossy': 7}


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    Attributes:
        mode: lossless (admissible systems only) or lossy (with distortion)
        sizes: optional dict of cardinalities keyed by Var (Q, U1, V1, U2,
            V2); missing entries default to |X_i| + 1 for U_i, 2 for V_i
            and 1 for Q
        restarts: number of random restarts
        iterations: local steps per restart
        scale: perturbation scale of local_step
        seed: base random seed
        weights: optional scalarization weights over the six rates (seven
            with D in lossy mode); each restart draws its own when omitted
        penalty: weight on H(f|U1,U2,Y,Q) while searching in lossless mode
    """

    class Mode(StrEnum):
        """Enum for search modes."""
        LOSSLESS = 'lossless'
        LOSSY = 'lossy'

    mode: Mode = Mode.LOSSLESS
    sizes: dict = None
    restarts: int = DEFAULT_RESTARTS
    iterations: int = DEFAULT_ITERATIONS
    scale: float = DEFAULT_SCALE
    seed: int = 0
    weights: tuple = None
    penalty: float = DEFAULT_PENALTY

    @property
    def objective_count(self):
        return len(RATE_FIELDS) + (self.mode == self.Mode.LOSSY)

    def resolved_sizes(self, model):
        """Cardinalities with defaults filled in."""
        sizes = {
            Var.Q: 1,
            Var.U1: model.x1.size + 1, Var.V1: DEFAULT_V_SIZE,
            Var.U2: model.x2.size + 1, Var.V2: DEFAULT_V_SIZE,
        }
        sizes.update({Var(k): int(v) for k, v in (self.sizes or {}).items()})
        return sizes

    def validate(self, model):
        """Raise PreconditionError unless the settings fit the model."""
        offset = CAP_OFFSETS[self.Mode(self.mode)]
        sizes = self.resolved_sizes(model)
        caps = {Var.Q: MAX_Q_SIZE}
        for i, x in ((1, model.x1), (2, model.x2)):
            caps[Var(f'V{i}')] = x.size + offset
            caps[Var(f'U{i}')] = (x.size + offset) ** 2
        for name, size in sizes.items():
            if not 1 <= size <= caps[name]:
                raise PreconditionError(
                    Check.INFEASIBLE_CARDINALITY,
                    f'|{name}| = {size}, allowed 1..{caps[name]}.')
        if self.restarts < 0 or self.iterations < 0 or self.scale <= 0:
            raise PreconditionError(
                Check.BAD_ARGUMENT,
                'restarts and iterations must be >= 0, scale > 0.')
        if self.weights is not None:
            _check_weights(self.weights, self.objective_count)
        if self.mode == self.Mode.LOSSY and model.distortion is None:
            raise PreconditionError(Check.MISSING_DISTORTION)


def _check_weights(weights, count=None):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or (count is not None and w.size != count) \
            or w.size not in (len(RATE_FIELDS), len(RATE_FIELDS) + 1) \
            or np.any(w < 0) or not np.any(w > 0):
        raise PreconditionError(
            Check.BAD_WEIGHTS, f'Got {list(np.atleast_1d(w))}.')
    return w


def scalarize(bounds, weights):
    """Weighted sum of bound coordinates, lower is better.

    Args:
        bounds: RateBounds
        weights: six weights over the rates, or seven with D last
    Returns:
        score
    """
    w = _check_weights(weights)
    with_d = w.size > len(RATE_FIELDS)
    if with_d and bounds.d is None:
        raise PreconditionError(Check.BAD_WEIGHTS, 'Bounds carry no D.')
    return float(np.dot(w, bounds.values(with_d=with_d)))


def local_step(aux, scale, rng):
    """Move one channel row part of the way toward a random simplex point.

    The row becomes row + min(scale, 1) * (dirichlet - row), renormalized.
    Rows with a single output (and weights when |Q| = 1) are never picked.

    Args:
        aux: AuxSystem
        scale: step size, > 0
        rng: numpy Generator or seed
    Returns:
        perturbed AuxSystem
    """
    if scale <= 0:
        raise PreconditionError(Check.BAD_ARGUMENT, f'scale = {scale}.')
    rng = np.random.default_rng(rng)
    movable = [name for name in AuxSystem.KERNELS
               if getattr(aux, name).shape[2] > 1]
    if aux.q_size > 1:
        movable.append('weights')
    if not movable:
        return aux

    name = movable[rng.integers(len(movable))]
    values = np.array(getattr(aux, name))
    if name == 'weights':
        row = values
    else:
        q, r = rng.integers(values.shape[0]), rng.integers(values.shape[1])
        row = values[q, r]
    step = min(scale, 1.0)
    row[:] = row + step * (rng.dirichlet(np.ones(row.size)) - row)
    row /= row.sum()
    return AuxSystem(**(aux.to_dict() | {name: values}), tol_norm=aux.tol_norm)


@dataclass(frozen=True)
class FrontPoint:
    """One auxiliary system on a front, identified by its fingerprint."""
    fingerprint: str
    bounds: RateBounds
    aux: AuxSystem = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ParetoFront:
    """Mutually non-dominated bound sets under component-wise <=.

    Attributes:
        points: tuple of FrontPoint sorted by fingerprint
        with_d: whether D is one of the compared coordinates
        tol: comparison tolerance in bits
    """
    points: tuple = ()
    with_d: bool = False
    tol: float = DEFAULT_TOLERANCES.num

    @classmethod
    def from_points(cls, points, with_d=False, tol=DEFAULT_TOLERANCES.num):
        """Union of candidate points reduced by the domination filter.

        Points are scanned in fingerprint order and compared only with the
        points kept so far. A candidate is dropped when a kept point is no
        worse than it within `tol` in every coordinate, so points equal
        within `tol` keep the smallest fingerprint. Otherwise it evicts the
        kept points it beats by more than `tol` in some coordinate while
        being no worse in the rest.
        """
        unique = {}
        for p in points:
            unique.setdefault(p.fingerprint, p)
        kept, kept_values = [], []
        for key in sorted(unique):
            b = unique[key]
            v = b.bounds.values(with_d)
            if kept and np.any(
                    np.all(np.array(kept_values) <= v + tol, axis=1)):
                continue
            beaten = [np.all(v <= k + tol) and np.any(v < k - tol)
                      for k in kept_values]
            kept = [p for p, out in zip(kept, beaten) if not out]
            kept_values = [k for k, out in zip(kept_values, beaten) if not out]
            kept.append(b)
            kept_values.append(v)
        return cls(tuple(kept), with_d, tol)

    def merge(self, other):
        """Front of the union of two fronts."""
        return ParetoFront.from_points(
            self.points + tuple(other.points), self.with_d, self.tol)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_frame(self):
        """One row per point: origin, six rates, d and aux fingerprint."""
        return pd.DataFrame(
            [p.bounds.as_record() | {'fingerprint': p.fingerprint}
             for p in self.points],
            columns=['origin', *RATE_FIELDS, 'd', 'fingerprint'])


@dataclass(frozen=True)
class _Candidate:
    aux: AuxSystem
    bounds: RateBounds
    residual: float
    score: float


def _evaluate(model, aux, cfg, weights, tol):
    """Bounds and penalized score of one system, or None if inconsistent."""
    try:
        if cfg.mode == SearchConfig.Mode.LOSSY:
            bounds = eval_inner_lossy(model, aux, tol=tol)
            return _Candidate(aux, bounds, 0.0, scalarize(bounds, weights))
        joint = induced_joint(model, aux, with_function=True)
        residual = conditional_entropy(
            joint, Var.F, (Var.U1, Var.U2, Var.Y, Var.Q), tol)
        bounds = make_bounds(Origin.THM1_INNER, inner_rates(joint, tol), tol)
    except ConsistencyError as e:
        logger.debug('Skipping candidate %s: %s', aux.fingerprint()[:12], e)
        return None
    score = scalarize(bounds, weights) + cfg.penalty * residual
    return _Candidate(aux, bounds, residual, score)


def _accepted(candidate, cfg, tol):
    if candidate is None:
        return False
    return cfg.mode == SearchConfig.Mode.LOSSY or candidate.residual <= tol.adm


def _point(candidate):
    return FrontPoint(
        candidate.aux.fingerprint(), candidate.bounds, candidate.aux)


def _run_restart(model, cfg, sizes, restart, tol):
    """Coordinate descent from one start; returns visited accepted points."""
    rng = np.random.default_rng([cfg.seed, restart])
    count = cfg.objective_count
    if cfg.weights is not None:
        weights = np.asarray(cfg.weights, dtype=float)
    elif restart == 0:
        weights = np.ones(count)
    else:
        weights = rng.dirichlet(np.ones(count))

    if restart == 0:
        start = AuxSystem.identity(model, sizes[Var.Q])
    else:
        start = AuxSystem.random(model, sizes, rng)

    current = _evaluate(model, start, cfg, weights, tol)
    points = [_point(current)] if _accepted(current, cfg, tol) else []
    for _ in range(cfg.iterations):
        base = current.aux if current is not None else start
        proposal = _evaluate(
            model, local_step(base, cfg.scale, rng), cfg, weights, tol)
        if proposal is None:
            continue
        if _accepted(proposal, cfg, tol):
            points.append(_point(proposal))
        if current is None or proposal.score < current.score:
            current = proposal

    logger.info('Restart %d finished with %d accepted candidates',
                restart, len(points))
    return points


def search_inner(model, cfg=SearchConfig(), n_jobs=1, tol=DEFAULT_TOLERANCES):
    """Sample the inner-bound union and keep its Pareto front.

    Lossless mode compares the six rates of admissible systems only; lossy
    mode adds D from the optimal reconstruction. The identity and constant
    systems are always among the candidates, so a lossless front is never
    empty.

    Args:
        model: SourceModel
        cfg: SearchConfig
        n_jobs: joblib worker count
        tol: Tolerances
    Returns:
        ParetoFront
    """
    cfg.validate(model)
    sizes = cfg.resolved_sizes(model)
    lossy = cfg.mode == SearchConfig.Mode.LOSSY
    seed_weights = np.ones(cfg.objective_count)

    candidates = []
    for aux in (AuxSystem.identity(model), AuxSystem.constant(model)):
        seeded = _evaluate(model, aux, cfg, seed_weights, tol)
        if _accepted(seeded, cfg, tol):
            candidates.append(_point(seeded))

    # joblib returns results in submission order, i.e. by restart index
    per_restart = Parallel(n_jobs=n_jobs)(
        delayed(_run_restart)(model, cfg, sizes, r, tol)
        for r in range(cfg.restarts))
    for points in per_restart:
        candidates.extend(points)

    front = ParetoFront.from_points(candidates, with_d=lossy, tol=tol.num)
    if not lossy:
        # Post hoc check on the full admissibility definition
        verified = tuple(
            p for p in front if check_admissible(model, p.aux, tol)[0])
        if len(verified) != len(front):
            logger.warning('Dropped %d front points failing admissibility',
                           len(front) - len(verified))
            front = ParetoFront(verified, front.with_d, front.tol)

    logger.info('Search finished: %d candidates, front of %d',
                len(candidates), len(front))
    return front
