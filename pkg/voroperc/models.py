"""
Colouring rules that turn a marked configuration into an open region.

``continuum(p)``
    ``y`` is open iff its distance to the open points is at most its distance
    to the closed points.

``truncated(N, p)``
    The configuration is cut into boxes ``N x + [0, N)^d``.  A box holding
    more than ``2 N^d`` closed points is *saturated* and treated as a solid
    closed obstacle.  ``y`` is open iff its distance to the open points is at
    most both ``N`` and its distance to the closed obstacles.

Either rule can be followed by Bernoulli box fields, applied in order, each
either added to (``union``) or removed from (``difference``) the open region.
Ties count as open.
"""

import logging
import math

import numpy as np
from scipy.spatial import cKDTree

from voroperc.constants import EPS_GEOM, FIELD_STREAM_TAG
from voroperc.exceptions import ValidationError
from voroperc.ppp import Window, make_rng, open_mask
from voroperc.regions import Box

logger = logging.getLogger(__name__)

KINDS = ('continuum', 'truncated')
MODES = ('union', 'difference')


def _check_level(p):
    if not (0.0 <= p <= 1.0):
        raise ValidationError('p must lie in [0, 1], got {0}'.format(p))
    return float(p)


def _check_side(N):
    if not (N > 0 and np.isfinite(N)):
        raise ValidationError('box side N must be positive, got {0}'.format(N))
    return float(N)


def _offsets(d):
    """All vectors of ``{-1, 0, 1}^d``."""
    return np.stack(np.meshgrid(*[[-1, 0, 1]] * d, indexing='ij'), axis=-1).reshape(-1, d)


def _box_distance(points, lo, hi):
    gap = np.maximum(np.maximum(lo - points, points - hi), 0.0)
    return np.linalg.norm(gap, axis=-1)


class BoxField(object):
    '''
    Bernoulli occupancy of the lattice boxes ``N (x + [0, 1]^d)`` meeting a
    window.  The geometry is the union of the *closed* occupied boxes.

    .. attribute:: occupied

       Boolean array; entry ``i`` is the site ``start + i``.
    '''

    def __init__(self, N, delta, window, seed, start, occupied):
        self.N = N
        self.delta = delta
        self.window = window
        self.seed = seed
        self.start = np.asarray(start, dtype=int)
        self.occupied = occupied

    def sites(self):
        """Occupied sites as an ``(k, d)`` integer array."""
        return np.argwhere(self.occupied) + self.start

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.window.dimension)
        base = np.floor(flat / self.N).astype(int)
        shape = np.array(self.occupied.shape)
        inside = np.zeros(len(flat), dtype=bool)
        d = self.window.dimension
        for offset in np.stack(np.meshgrid(*[[-1, 0]] * d, indexing='ij'), axis=-1).reshape(-1, d):
            site = base + offset
            lo = site * self.N
            hit = np.all((flat >= lo) & (flat <= lo + self.N), axis=1)
            index = site - self.start
            valid = np.all((index >= 0) & (index < shape), axis=1)
            hit &= valid
            if hit.any():
                hit[hit] = self.occupied[tuple(index[hit].T)]
            inside |= hit
        return inside.reshape(points.shape[:-1])

    def describe(self):
        return {'N': self.N, 'delta': self.delta, 'seed': self.seed, 'window': self.window.to_dict()}

    def __eq__(self, other):
        return (isinstance(other, BoxField) and self.N == other.N and self.delta == other.delta
                and self.seed == other.seed and self.window == other.window)

    def __hash__(self):
        return hash((self.N, self.delta, self.seed, self.window))

    def __repr__(self):
        return '<BoxField N={0} delta={1} seed={2} occupied={3}/{4}>'.format(
            self.N, self.delta, self.seed, int(self.occupied.sum()), self.occupied.size)


def bernoulli_box_field(N, delta, window, seed):
    '''
    Sample i.i.d. Bernoulli(``delta``) occupancy for every lattice box
    meeting ``window`` (plus one layer below, so closures are complete).

    The stream is ``(seed, FIELD_STREAM_TAG)``, separate from the stream a
    configuration sampled with the same seed uses.
    '''
    N = _check_side(N)
    if not (0.0 <= delta <= 1.0):
        raise ValidationError('delta must lie in [0, 1], got {0}'.format(delta))
    start = np.floor(window.lo / N).astype(int) - 1
    stop = np.ceil(window.hi / N).astype(int)
    rng = make_rng(seed, FIELD_STREAM_TAG)
    occupied = rng.random(tuple(stop - start)) < delta
    return BoxField(N, float(delta), window, seed, start, occupied)


class TruncatedObstacles(object):
    '''
    Closed obstacles of the truncated model at one level ``p``.

    .. attribute:: closed_points

       Frozen set of ids of closed points in non-saturated boxes.

    .. attribute:: saturated

       Boolean array over the boxes of the window; box ``i`` is
       ``N (start + i) + [0, N)^d``.
    '''

    def __init__(self, config, N, p, start, counts, saturated, closed_points):
        self.config = config
        self.N = N
        self.p = p
        self.start = start
        self.counts = counts
        self.saturated = saturated
        self.closed_points = closed_points
        ids = np.array(sorted(closed_points), dtype=int)
        self._tree = cKDTree(config.positions[ids]) if len(ids) else None

    @property
    def saturated_boxes(self):
        return [Box(self.N * s, self.N * (s + 1)) for s in np.argwhere(self.saturated) + self.start]

    def distance(self, points, cap=None):
        '''
        Euclidean distance from each point to the closed obstacles, capped at
        ``cap`` (default ``N``).  Saturated boxes count as solid sets.
        '''
        cap = self.N if cap is None else cap
        points = np.asarray(points, dtype=float).reshape(-1, self.config.dimension)
        if self._tree is None:
            dist = np.full(len(points), np.inf)
        else:
            dist, _ = self._tree.query(points, k=1, distance_upper_bound=cap)
        if self.saturated.any():
            home = np.floor(points / self.N).astype(int)
            shape = np.array(self.saturated.shape)
            for offset in _offsets(self.config.dimension):
                site = home + offset
                index = site - self.start
                valid = np.all((index >= 0) & (index < shape), axis=1)
                flagged = np.zeros(len(points), dtype=bool)
                flagged[valid] = self.saturated[tuple(index[valid].T)]
                if flagged.any():
                    lo = site[flagged] * self.N
                    gap = _box_distance(points[flagged], lo, lo + self.N)
                    dist[flagged] = np.minimum(dist[flagged], gap)
        return np.minimum(dist, cap)


def check_aligned(window, N):
    '''
    Raise unless ``window`` is paved exactly by boxes ``N x + [0, N)^d``.
    '''
    for bound in (window.lo, window.hi):
        ratio = bound / N
        if not np.allclose(ratio, np.round(ratio), rtol=0, atol=1e-9):
            raise ValidationError('window {0!r} is not aligned to boxes of side {1}'.format(window, N))


def truncated_obstacles(config, p, N):
    '''
    Classify the boxes of the window at level ``p``; cached per ``(p, N)``.

    :raises ValidationError: when the window is not aligned to side ``N``
    '''
    p = _check_level(p)
    N = _check_side(N)
    check_aligned(config.window, N)

    def factory():
        d = config.dimension
        start = np.round(config.window.lo / N).astype(int)
        shape = tuple(np.round(config.window.hi / N).astype(int) - start)
        closed = np.flatnonzero(~open_mask(config, p))
        index = np.floor(config.positions[closed] / N).astype(int) - start
        index = np.clip(index, 0, np.array(shape) - 1)
        flat = np.ravel_multi_index(index.T, shape) if len(closed) else np.zeros(0, dtype=int)
        counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
        saturated = counts > 2 * N ** d
        kept = closed[~saturated.ravel()[flat]] if len(closed) else closed
        logger.debug('truncated obstacles at p=%g N=%g: %d saturated boxes', p, N, saturated.sum())
        return TruncatedObstacles(config, N, p, start, counts, saturated, frozenset(kept.tolist()))

    return config.cached(('obstacles', p, N), factory)


class ColoringModel(object):
    '''
    An immutable colouring rule: a base kind at level :attr:`p` (and box side
    :attr:`N` for the truncated kind) followed by :attr:`field_ops`, a tuple
    of ``(BoxField, mode)`` pairs.
    '''

    def __init__(self, kind, p, N=None, field_ops=()):
        if kind not in KINDS:
            raise ValidationError('unknown model kind {0!r}'.format(kind))
        self.kind = kind
        self.p = _check_level(p)
        self.N = _check_side(N) if kind == 'truncated' else None
        for field, mode in field_ops:
            if mode not in MODES:
                raise ValidationError('unknown field mode {0!r}'.format(mode))
        self.field_ops = tuple(field_ops)

    def with_level(self, p):
        return ColoringModel(self.kind, p, self.N, self.field_ops)

    def describe(self):
        """JSON-ready descriptor; see :func:`model_from_descriptor`."""
        data = {'kind': self.kind, 'p': self.p,
                'fields': [dict(field.describe(), mode=mode) for field, mode in self.field_ops]}
        if self.kind == 'truncated':
            data['N'] = self.N
        return data

    def _key(self):
        return (self.kind, self.p, self.N, tuple((f, m) for f, m in self.field_ops))

    def __eq__(self, other):
        return isinstance(other, ColoringModel) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        base = 'continuum(p={0})'.format(self.p) if self.kind == 'continuum' else \
            'truncated(N={0}, p={1})'.format(self.N, self.p)
        ops = ''.join(' {0} {1!r}'.format(m, f) for f, m in self.field_ops)
        return '<ColoringModel {0}{1}>'.format(base, ops)


def continuum(p):
    return ColoringModel('continuum', p)


def truncated(N, p):
    return ColoringModel('truncated', p, N)


def compose(model, field, mode):
    """``model`` followed by ``field`` in ``mode`` (``'union'`` or ``'difference'``)."""
    return ColoringModel(model.kind, model.p, model.N, model.field_ops + ((field, mode),))


def model_from_descriptor(data, window=None):
    '''
    Rebuild a model from :meth:`ColoringModel.describe` output.  Field
    occupancies are resampled from their seeds on their own windows, or on
    ``window`` when the descriptor omits one.
    '''
    fields = []
    for item in data.get('fields', []):
        field_window = Window.from_dict(item['window']) if 'window' in item else window
        if field_window is None:
            raise ValidationError('box field descriptor needs a window')
        fields.append((bernoulli_box_field(item['N'], item['delta'], field_window, item['seed']),
                       item.get('mode', 'union')))
    return ColoringModel(data['kind'], data['p'], data.get('N'), fields)


class _Split(object):
    """Nearest-point trees of the open and closed points at one level."""

    def __init__(self, config, p):
        mask = open_mask(config, p)
        self.open_ids = np.flatnonzero(mask)
        self.closed_ids = np.flatnonzero(~mask)
        self.open_tree = cKDTree(config.positions[self.open_ids]) if len(self.open_ids) else None
        self.closed_tree = cKDTree(config.positions[self.closed_ids]) if len(self.closed_ids) else None


def _split(config, p):
    return config.cached(('split', p), lambda: _Split(config, p))


def _distances(tree, points, cap=np.inf):
    if tree is None:
        return np.full(len(points), np.inf)
    dist, _ = tree.query(points, k=1, distance_upper_bound=cap)
    return dist


def _base_membership(points, model, config, tol):
    split = _split(config, model.p)
    if model.kind == 'continuum':
        d_open = _distances(split.open_tree, points)
        d_closed = _distances(split.closed_tree, points)
        return np.isfinite(d_open) & (d_open <= d_closed + tol * (1 + d_closed))
    obstacles = truncated_obstacles(config, model.p, model.N)
    threshold = obstacles.distance(points)
    # beyond N + tol the answer is closed whatever the distance is
    d_open = _distances(split.open_tree, points, model.N * (1 + tol) + 2 * tol)
    return np.isfinite(d_open) & (d_open <= threshold + tol * (1 + threshold))


def membership_many(points, model, config, tol=EPS_GEOM, check=True):
    '''
    Vectorised :func:`membership` over an ``(m, d)`` array.

    :param check: reject points outside the analysis domain of the window
    '''
    points = np.asarray(points, dtype=float).reshape(-1, config.dimension)
    if check and not np.all(config.window.analysis.contains(points)):
        raise ValidationError('query point outside the analysis domain {0!r}'.format(config.window.analysis))
    if config.n == 0:
        result = np.zeros(len(points), dtype=bool)
    else:
        result = _base_membership(points, model, config, tol)
    for field, mode in model.field_ops:
        inside = field.contains(points)
        result = result | inside if mode == 'union' else result & ~inside
    return result


def membership(y, model, config, tol=EPS_GEOM):
    """Whether ``y`` is open under ``model`` in ``config``."""
    return bool(membership_many(np.asarray(y, dtype=float)[None, :], model, config, tol)[0])


def required_margin(model):
    '''
    Margin a window needs for membership inside its analysis domain to be
    final: ``2 N`` for the truncated kind (its range), 0 for the continuum,
    whose margin comes from tessellation certification instead.
    '''
    if model.kind == 'truncated':
        return 2 * model.N
    return 0.0


def alignment(model):
    '''
    Side every window edge must be a multiple of; 0 when unconstrained.

    Box fields align to their own side; the lcm is taken over integer sides.
    '''
    sides = [model.N] if model.kind == 'truncated' else []
    sides.extend(field.N for field, _ in model.field_ops)
    return common_side(sides)


def common_side(sides):
    """Smallest side that is a multiple of every side in ``sides`` (0 if none)."""
    if not sides:
        return 0.0
    if all(float(s).is_integer() for s in sides):
        result = 1
        for s in sides:
            result = result * int(s) // math.gcd(result, int(s))
        return float(result)
    return float(max(sides))
