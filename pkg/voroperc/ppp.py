"""
Marked Poisson point processes in axis-aligned windows.

A :class:`PointConfig` is one sample of the marked process: every point
carries a mark uniform in ``[0, 1]`` and is open at level ``p`` iff its mark is
at most ``p``, so a single sample realises every ``p`` at once.

Randomness comes from counter-based Philox streams keyed by numpy's
:class:`~numpy.random.SeedSequence`; a replica's stream is derived from
``(master_seed, spawn_key)`` and never from execution order.

>>> window = Window.centered(2.0, dimension=2)
>>> config = sample_ppp(window, intensity=1.0, seed=7)
>>> config.dimension
2
>>> config == sample_ppp(window, intensity=1.0, seed=7)
True
"""

import csv
import json
import logging
from collections import namedtuple

import numpy as np
from scipy.spatial import cKDTree

from voroperc.constants import COUNT_CAP, DEFAULT_INTENSITY, FLOAT_DIGITS
from voroperc.exceptions import BudgetExceeded, ValidationError
from voroperc.regions import Box

logger = logging.getLogger(__name__)

MarkedPoint = namedtuple('MarkedPoint', ['id', 'position', 'mark'])


def seed_sequence(seed, *spawn_key):
    """
    The :class:`~numpy.random.SeedSequence` of ``seed`` with the given
    spawn key.  This is the documented mixing function for replica streams.
    """
    if isinstance(seed, np.random.SeedSequence):
        if not spawn_key:
            return seed
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + spawn_key)
    return np.random.SeedSequence(int(seed), spawn_key=spawn_key)


def make_rng(seed, *spawn_key):
    """A Philox generator on :func:`seed_sequence` ``(seed, *spawn_key)``."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *spawn_key)))


def derive_seed(seed, *spawn_key):
    """A 64-bit integer seed drawn from the stream ``(seed, *spawn_key)``."""
    state = seed_sequence(seed, *spawn_key).generate_state(1, dtype=np.uint64)
    return int(state[0])


class Window(object):
    '''
    Half-open sampling window ``[lo, hi)`` with a margin shell.  The
    analysis domain is the window shrunk by ``margin`` on every side.
    '''

    def __init__(self, lo, hi, margin=0.0):
        lo = np.array(lo, dtype=float).reshape(-1)
        hi = np.array(hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValidationError('window corners have different dimensions')
        if lo.shape[0] < 2:
            raise ValidationError('window dimension must be at least 2, got {0}'.format(lo.shape[0]))
        if not np.all(hi - lo > 0):
            raise ValidationError('degenerate window [{0}, {1})'.format(lo.tolist(), hi.tolist()))
        if margin < 0 or not np.all(hi - lo > 2 * margin):
            raise ValidationError('margin {0} does not fit in window [{1}, {2})'.format(
                margin, lo.tolist(), hi.tolist()))
        lo.flags.writeable = False
        hi.flags.writeable = False
        self.lo = lo
        self.hi = hi
        self.margin = float(margin)

    @classmethod
    def centered(cls, radius, dimension, margin=0.0):
        """The window ``[-(radius + margin), radius + margin)^d``."""
        half = float(radius) + float(margin)
        return cls(-half * np.ones(dimension), half * np.ones(dimension), margin)

    @property
    def dimension(self):
        return self.lo.shape[0]

    @property
    def sides(self):
        return self.hi - self.lo

    @property
    def volume(self):
        return float(np.prod(self.sides))

    @property
    def box(self):
        return Box(self.lo, self.hi)

    @property
    def analysis(self):
        """The analysis domain as a closed :class:`~voroperc.regions.Box`."""
        return Box(self.lo + self.margin, self.hi - self.margin)

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lo) & (points < self.hi), axis=-1)

    def to_dict(self):
        return {'dimension': self.dimension, 'lo': self.lo.tolist(),
                'hi': self.hi.tolist(), 'margin': self.margin}

    @classmethod
    def from_dict(cls, data):
        return cls(data['lo'], data['hi'], data.get('margin', 0.0))

    def __eq__(self, other):
        return (isinstance(other, Window) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi) and self.margin == other.margin)

    def __hash__(self):
        return hash((tuple(self.lo), tuple(self.hi), self.margin))

    def __repr__(self):
        return '<Window {0} x {1} margin={2}>'.format(self.lo.tolist(), self.hi.tolist(), self.margin)


class SpatialHash(object):
    '''
    Uniform-grid bucket index.  Points are sorted by bucket so that every
    bucket is a contiguous slice of :attr:`order`.
    '''

    def __init__(self, positions, lo, hi, side):
        self.positions = positions
        self.lo = np.asarray(lo, dtype=float)
        extent = np.asarray(hi, dtype=float) - self.lo
        side = float(side)
        # keep the bucket array proportional to the number of points
        while np.prod(np.ceil(extent / side)) > 4 * len(positions) + 4096:
            side *= 2.0
        self.side = side
        self.shape = np.maximum(np.ceil(extent / side), 1).astype(int)
        flat = np.ravel_multi_index(self.bucket_of(positions).T, self.shape) \
            if len(positions) else np.zeros(0, dtype=int)
        self.order = np.argsort(flat, kind='stable')
        counts = np.bincount(flat, minlength=int(np.prod(self.shape)))
        self._starts = np.concatenate(([0], np.cumsum(counts)))

    def bucket_of(self, points):
        points = np.asarray(points, dtype=float)
        index = np.floor((points - self.lo) / self.side).astype(int)
        return np.clip(index, 0, self.shape - 1)

    def _ids_in_range(self, lo_index, hi_index):
        spans = [np.arange(a, b + 1) for a, b in zip(lo_index, hi_index)]
        if np.prod([len(s) for s in spans]) >= len(self.positions):
            return np.arange(len(self.positions))
        grids = np.meshgrid(*spans, indexing='ij')
        flats = np.ravel_multi_index([g.ravel() for g in grids], self.shape)
        starts = self._starts[flats]
        ends = self._starts[flats + 1]
        pieces = [self.order[s:e] for s, e in zip(starts, ends) if e > s]
        if not pieces:
            return np.zeros(0, dtype=int)
        return np.concatenate(pieces)

    def lookup(self, position):
        """Ids registered in the bucket containing ``position``."""
        index = self.bucket_of(position)
        return self._ids_in_range(index, index)

    def within(self, y, radius):
        """Ids of points at Euclidean distance at most ``radius`` from ``y``."""
        y = np.asarray(y, dtype=float)
        candidates = self._ids_in_range(self.bucket_of(y - radius), self.bucket_of(y + radius))
        if len(candidates) == 0:
            return candidates
        dist = np.linalg.norm(self.positions[candidates] - y, axis=1)
        return np.sort(candidates[dist <= radius])

    def nearest(self, y, k=1):
        '''
        The ``k`` nearest points to ``y`` as ``(ids, distances)``, sorted by
        distance and then by id.  Rings of buckets are added around the bucket
        of ``y`` until no unexplored bucket can hold a closer point.
        '''
        y = np.asarray(y, dtype=float)
        n = len(self.positions)
        k = min(k, n)
        if k == 0:
            return np.zeros(0, dtype=int), np.zeros(0)
        center = self.bucket_of(y)
        last = self.shape - 1
        ring = 0
        while True:
            lo_index = np.maximum(center - ring, 0)
            hi_index = np.minimum(center + ring, last)
            covers_all = np.all(lo_index == 0) and np.all(hi_index == last)
            candidates = self._ids_in_range(lo_index, hi_index)
            if len(candidates) >= k:
                dist = np.linalg.norm(self.positions[candidates] - y, axis=1)
                order = np.lexsort((candidates, dist))[:k]
                if covers_all:
                    return candidates[order], dist[order]
                bound = np.inf
                for i in range(len(center)):
                    if lo_index[i] > 0:
                        bound = min(bound, y[i] - (self.lo[i] + lo_index[i] * self.side))
                    if hi_index[i] < last[i]:
                        bound = min(bound, self.lo[i] + (hi_index[i] + 1) * self.side - y[i])
                if dist[order[-1]] < bound:
                    return candidates[order], dist[order]
            ring += 1


class PointConfig(object):
    '''
    A marked point configuration in a :class:`Window`.

    Positions and marks are read-only arrays; ids are the row indices.
    Derived structures (k-d tree, Delaunay dual, cell graphs) are cached on
    the instance the first time they are needed and never change afterwards.
    '''

    def __init__(self, window, positions, marks, intensity=DEFAULT_INTENSITY, seed=None,
                 index_side=None):
        positions = np.array(positions, dtype=float).reshape(-1, window.dimension)
        marks = np.array(marks, dtype=float).reshape(-1)
        if positions.shape[0] != marks.shape[0]:
            raise ValidationError('{0} positions but {1} marks'.format(positions.shape[0], marks.shape[0]))
        if np.any((marks < 0) | (marks > 1)):
            raise ValidationError('marks must lie in [0, 1]')
        if not np.all(window.contains(positions)):
            raise ValidationError('a point lies outside {0!r}'.format(window))
        positions.flags.writeable = False
        marks.flags.writeable = False
        self.window = window
        self.positions = positions
        self.marks = marks
        self.intensity = float(intensity)
        self.seed = seed
        if index_side is None:
            index_side = (1.0 / self.intensity) ** (1.0 / window.dimension)
        self.index = SpatialHash(positions, window.lo, window.hi, index_side)
        self._cache = {}

    @classmethod
    def from_points(cls, window, positions, marks=None, intensity=DEFAULT_INTENSITY):
        """A hand-built configuration; marks default to 0.5."""
        positions = np.asarray(positions, dtype=float).reshape(-1, window.dimension)
        if marks is None:
            marks = np.full(len(positions), 0.5)
        return cls(window, positions, marks, intensity=intensity)

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dimension(self):
        return self.window.dimension

    @property
    def ids(self):
        return np.arange(self.n)

    @property
    def points(self):
        return [MarkedPoint(i, self.positions[i], float(self.marks[i])) for i in range(self.n)]

    @property
    def kdtree(self):
        """A :class:`scipy.spatial.cKDTree` over the positions, for batch queries."""
        if 'kdtree' not in self._cache:
            self._cache['kdtree'] = cKDTree(self.positions)
        return self._cache['kdtree']

    def cached(self, key, factory):
        if key not in self._cache:
            self._cache[key] = factory()
        return self._cache[key]

    def nearest(self, y, k=1):
        return self.index.nearest(y, k)

    def nearest_many(self, points, k=1):
        '''
        Batch nearest-neighbour query; returns ``(distances, ids)`` shaped
        ``(m, k)``.  Missing neighbours have infinite distance and id ``n``.
        '''
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        if self.n == 0:
            return (np.full((len(points), k), np.inf), np.zeros((len(points), k), dtype=int))
        dist, ids = self.kdtree.query(points, k=k)
        return dist.reshape(len(points), k), ids.reshape(len(points), k)

    def __eq__(self, other):
        return (isinstance(other, PointConfig) and self.window == other.window
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.marks, other.marks))

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return '<PointConfig n={0} {1!r}>'.format(self.n, self.window)


def sample_ppp(window, intensity=DEFAULT_INTENSITY, seed=0):
    '''
    Sample a marked Poisson process of the given intensity in ``window``.

    The count is drawn first, then i.i.d. uniform positions and marks, all
    from the Philox stream of ``seed``.

    :param window: a :class:`Window`
    :param intensity: points per unit volume; must be positive
    :param seed: integer seed or :class:`~numpy.random.SeedSequence`
    '''
    if not (np.isfinite(intensity) and intensity > 0):
        raise ValidationError('intensity must be positive, got {0}'.format(intensity))
    mean = intensity * window.volume
    if mean > COUNT_CAP:
        raise BudgetExceeded('expected {0:.3g} points exceeds the cap of {1:.3g}'.format(mean, COUNT_CAP))
    rng = make_rng(seed)
    count = int(rng.poisson(mean))
    positions = window.lo + window.sides * rng.random((count, window.dimension))
    # lo + side * u can round up to hi
    positions = np.minimum(positions, np.nextafter(window.hi, window.lo))
    marks = rng.random(count)
    logger.debug('sampled %d points in %r', count, window)
    return PointConfig(window, positions, marks, intensity=intensity,
                       seed=seed if not isinstance(seed, np.random.SeedSequence) else None)


def _check_level(p):
    if not (0.0 <= p <= 1.0):
        raise ValidationError('p must lie in [0, 1], got {0}'.format(p))


def open_mask(config, p):
    """Boolean array: point ``i`` is open at level ``p``."""
    _check_level(p)
    return config.marks <= p


def open_closed(config, p):
    '''
    Partition the ids into ``(open, closed)`` frozensets at level ``p``.

    >>> window = Window([0, 0], [3, 1])
    >>> config = PointConfig(window, [[0.5, 0.5], [1.5, 0.5], [2.5, 0.5]], [0.2, 0.6, 0.9])
    >>> open_closed(config, 0.5)
    (frozenset({0}), frozenset({1, 2}))
    '''
    mask = open_mask(config, p)
    ids = np.arange(config.n)
    return frozenset(ids[mask].tolist()), frozenset(ids[~mask].tolist())


def _format_float(value):
    return '{0:.{1}g}'.format(float(value), FLOAT_DIGITS)


def dump_config(config, path):
    '''
    Write ``config`` as ``id,x1..xd,mark`` CSV at ``path`` with a JSON sidecar
    at ``path + '.json'``.
    '''
    d = config.dimension
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['id'] + ['x{0}'.format(i + 1) for i in range(d)] + ['mark'])
        for i in range(config.n):
            writer.writerow([i] + [_format_float(v) for v in config.positions[i]]
                            + [_format_float(config.marks[i])])
    sidecar = dict(config.window.to_dict(), intensity=config.intensity, seed=config.seed)
    with open(path + '.json', 'w') as handle:
        json.dump(sidecar, handle, sort_keys=True)


def load_config(path):
    """Inverse of :func:`dump_config`."""
    with open(path + '.json') as handle:
        sidecar = json.load(handle)
    window = Window.from_dict(sidecar)
    positions = []
    marks = []
    with open(path, newline='') as handle:
        reader = csv.reader(handle)
        next(reader)
        for row in reader:
            positions.append([float(v) for v in row[1:-1]])
            marks.append(float(row[-1]))
    return PointConfig(window, np.array(positions).reshape(-1, window.dimension), marks,
                       intensity=sidecar['intensity'], seed=sidecar.get('seed'))
