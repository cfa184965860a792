"""
Event detectors.

Every detector looks at the open region of a model inside an l-infinity box
centred at the origin (``Lambda_r = [-r, r]^d``) and answers a yes/no
question about its clusters.  Clusters come from a clustering backend (see
:mod:`voroperc.backends`); when none is given, continuum models without box
fields use the exact cell graph and everything else the lattice.

Detectors are registered by name with :func:`register_event` so that the
estimators can evaluate them from an experiment descriptor; each
registration declares the radius of the box the detector inspects.
"""

import logging
import math
from collections import namedtuple

import networkx as nx
import numpy as np
from scipy import ndimage

from voroperc.backends import cellgraph_backend, lattice_backend
from voroperc.cellgraph import (build_cell_graph, cell_bbox, cell_diameter_bound, cells_meeting_box,
                                locate_many, voronoi_dual)
from voroperc.constants import EPS_GEOM
from voroperc.exceptions import ValidationError
from voroperc.models import membership
from voroperc.ppp import make_rng
from voroperc.regions import Box, BoxExterior, face, slab

logger = logging.getLogger(__name__)

OriginClusterStats = namedtuple('OriginClusterStats',
                                ['diam_proxy', 'vol_estimate', 'vol_stderr', 'censored', 'size'])
EMPTY_CLUSTER = OriginClusterStats(0.0, 0.0, 0.0, False, 0)

EventSpec = namedtuple('EventSpec', ['name', 'detector', 'extent', 'increasing', 'tessellation'])
Outcome = namedtuple('Outcome', ['value', 'aux'])


def lam(r, dimension, center=None):
    """The box ``Lambda_r`` (around ``center``)."""
    return Box.centered(r, dimension, center)


def check_domain(config, box):
    '''
    Raise unless ``box`` lies inside the analysis domain of the window.
    '''
    if not config.window.analysis.contains_box(box, 1e-12):
        raise ValidationError('{0!r} exceeds the analysis domain {1!r}'.format(box, config.window.analysis))


def default_backend(model):
    if model.kind == 'continuum' and not model.field_ops:
        return cellgraph_backend()
    return lattice_backend()


def open_clusters(config, model, domain, backend=None):
    '''
    Open clusters of ``model`` inside the box ``domain``.

    :param backend: a backend function; see :func:`default_backend`
    :returns: :class:`~voroperc.backends.tools.ClusterLabeling`
    '''
    check_domain(config, domain)
    backend = default_backend(model) if backend is None else backend
    return backend(config, model, domain)


def crossing(labeling, source, target):
    """Whether some open cluster of ``labeling`` touches both regions."""
    return labeling.crossing(source, target)


def box_crossing(config, model, L, axis=0, backend=None):
    '''
    Crossing of ``Lambda_L`` inside ``Lambda_L`` between its two faces
    orthogonal to ``axis``.
    '''
    box = lam(L, config.dimension)
    labeling = open_clusters(config, model, box, backend)
    return crossing(labeling, face(box, axis, -1), face(box, axis, +1))


def connects(config, model, r, R, backend=None):
    """``Lambda_r`` is connected to the boundary of ``Lambda_R`` inside ``Lambda_R``."""
    if not 0 < r < R:
        raise ValidationError('need 0 < r < R, got r={0} R={1}'.format(r, R))
    box = lam(R, config.dimension)
    labeling = open_clusters(config, model, box, backend)
    return crossing(labeling, lam(r, config.dimension), BoxExterior(box))


def slab_crossing(config, model, L, M, backend=None):
    '''
    Crossing of the slab ``[-L, L]^2 x [0, M]^(d-2)`` between its faces
    ``x_1 = -L`` and ``x_1 = L``.
    '''
    domain = slab(L, M, config.dimension)
    labeling = open_clusters(config, model, domain, backend)
    return crossing(labeling, face(domain, 0, -1), face(domain, 0, +1))


def uniqueness_count(config, model, L, backend=None):
    '''
    Number of clusters of the open region in ``Lambda_2L`` meeting both
    ``Lambda_{L/2}`` and the complement of the open box ``Lambda_L``.
    '''
    d = config.dimension
    labeling = open_clusters(config, model, lam(2 * L, d), backend)
    return len(labeling.crossing_clusters(lam(L / 2.0, d), BoxExterior(lam(L, d))))


def local_uniqueness(config, model, L, strict=False, backend=None):
    '''
    Exactly one cluster crosses the annulus ``Lambda_L minus Lambda_{L/2}``
    inside ``Lambda_2L``; with ``strict`` at most one.
    '''
    count = uniqueness_count(config, model, L, backend)
    return count <= 1 if strict else count == 1


def good_uniqueness(config, model, L, backend=None):
    '''
    :func:`local_uniqueness` holds and the crossing cluster also joins
    ``Lambda_{L/4}`` to the boundary of ``Lambda_2L``.
    '''
    d = config.dimension
    domain = lam(2 * L, d)
    labeling = open_clusters(config, model, domain, backend)
    crossing_ids = labeling.crossing_clusters(lam(L / 2.0, d), BoxExterior(lam(L, d)))
    if len(crossing_ids) != 1:
        return False
    return bool(crossing_ids & labeling.crossing_clusters(lam(L / 4.0, d), BoxExterior(domain)))


def probe_sites(L, ell, dimension):
    """Points of ``ell Z^d`` inside ``Lambda_L``."""
    m = int(math.floor(L / float(ell) + 1e-9))
    axis = np.arange(-m, m + 1) * float(ell)
    return np.stack([g.ravel() for g in np.meshgrid(*[axis] * dimension, indexing='ij')], axis=1)


def dense_cluster(config, model, L, ell, backend=None):
    '''
    One cluster of the open region in ``Lambda_2L`` meets ``Lambda_ell(x)``
    for every ``x`` in ``ell Z^d ∩ Lambda_L``.
    '''
    if not 0 < ell <= L:
        raise ValidationError('need 0 < ell <= L, got ell={0} L={1}'.format(ell, L))
    d = config.dimension
    labeling = open_clusters(config, model, lam(2 * L, d), backend)
    candidates = None
    for x in probe_sites(L, ell, d):
        touching = labeling.touching(lam(ell, d, x))
        candidates = touching if candidates is None else candidates & touching
        if not candidates:
            return False
    return True


def chemical_distance_ok(config, R, M, conservative=False, center=None, tol=EPS_GEOM):
    '''
    Every two cells meeting ``Lambda_R`` are joined by a path of at most
    ``M`` edges in the cell graph restricted to ``Lambda_2R``.

    :param conservative: only use edges whose witness ball (centred at the
                         witness, through the two sites) lies in ``Lambda_2R``,
                         so the path survives any change of the configuration
                         outside ``Lambda_2R``
    :param center: centre of both boxes; the origin by default
    '''
    d = config.dimension
    domain = lam(2 * R, d, center)
    check_domain(config, domain)
    if config.n == 0:
        return True
    graph = build_cell_graph(config, domain, tol=tol)
    edges = graph.edges
    if conservative and len(edges):
        radius = np.linalg.norm(graph.witnesses - config.positions[edges[:, 0]], axis=1)
        inside = (np.all(graph.witnesses - radius[:, None] >= domain.lo, axis=1)
                  & np.all(graph.witnesses + radius[:, None] <= domain.hi, axis=1))
        edges = edges[inside]
    G = nx.Graph()
    G.add_nodes_from(cells_meeting_box(config, domain, tol).tolist())
    G.add_edges_from(edges.tolist())
    sources = cells_meeting_box(config, lam(R, d, center), tol).tolist()
    targets = set(sources)
    for s in sources:
        reached = nx.single_source_shortest_path_length(G, s, cutoff=M)
        if not targets.issubset(reached):
            return False
    return True


def star_connected_good_fraction(config, L, ell, kappa, threshold=None, conservative=False):
    '''
    Surrogate of the event that every large star-connected set of sites
    ``x`` in ``Z^d ∩ Lambda_{L/ell}`` has at least half of its sites good,
    where ``x`` is good when :func:`chemical_distance_ok` holds with
    ``R = 3 ell``, ``M = kappa ell`` around ``ell x``.

    The event fails iff the failing sites have a star-connected component of
    at least ``threshold`` sites (default ``sqrt(L) / (1000 ell)``).

    :returns: ``(outcome, field)`` where ``field`` is the boolean site array
    '''
    if not 0 < ell <= L:
        raise ValidationError('need 0 < ell <= L, got ell={0} L={1}'.format(ell, L))
    d = config.dimension
    sites = probe_sites(L, ell, d) / float(ell)
    side = int(round(len(sites) ** (1.0 / d)))
    good = np.array([chemical_distance_ok(config, 3 * ell, kappa * ell, conservative, ell * x)
                     for x in sites]).reshape((side,) * d)
    threshold = math.sqrt(L) / (1000.0 * ell) if threshold is None else threshold
    labeled, count = ndimage.label(~good, structure=np.ones((3,) * d))
    sizes = np.bincount(labeled.ravel(), minlength=count + 1)[1:]
    logger.debug('star-connected surrogate: %d failing sites in %d components', (~good).sum(), count)
    return not bool(np.any(sizes >= threshold)), good


def _cell_sizes(config, units, domain, tol):
    '''
    Diameter bound of each cell, capped by the diagonal of ``domain``.
    '''
    cap = float(np.linalg.norm(domain.sides))
    return np.array([min(cell_diameter_bound(config, x, tol), cap) for x in units])


def cluster_diameters(config, labeling, tol=EPS_GEOM):
    '''
    Diameter proxy of each cluster: the l-infinity extent of its unit
    centres plus twice its largest unit diameter.
    '''
    count = labeling.count
    d = config.dimension
    lo = np.full((count, d), np.inf)
    hi = np.full((count, d), -np.inf)
    np.minimum.at(lo, labeling.labels, labeling.positions)
    np.maximum.at(hi, labeling.labels, labeling.positions)
    extent = np.max(hi - lo, axis=1) if count else np.zeros(0)
    if labeling.kind == 'lattice':
        return extent + 2 * labeling.spacing
    widest = np.zeros(count)
    np.maximum.at(widest, labeling.labels, _cell_sizes(config, labeling.units, labeling.domain, tol))
    return extent + 2 * widest


def _member_bbox(config, members, domain, tol):
    dual = voronoi_dual(config, tol)
    lo = np.array(domain.hi, dtype=float)
    hi = np.array(domain.lo, dtype=float)
    for x in members:
        if dual is not None and dual.cell_certified[x]:
            clo, chi = dual.cell_lo[x], dual.cell_hi[x]
        else:
            clo, chi = cell_bbox(config, x)
        lo = np.minimum(lo, clo)
        hi = np.maximum(hi, chi)
    return Box(np.maximum(lo, domain.lo), np.minimum(np.maximum(hi, lo), domain.hi))


def origin_cluster_stats(config, model, sample_budget=1000, seed=0, backend=None, domain=None,
                         tol=EPS_GEOM):
    '''
    Size of the open cluster of the origin inside ``domain`` (the analysis
    domain by default).

    The volume of a cell cluster is estimated from ``sample_budget`` uniform
    points in the cluster's bounding box; a lattice cluster's volume is its
    site count times ``h^d``.  ``censored`` is set when the cluster reaches
    the boundary of ``domain``.
    '''
    domain = config.window.analysis if domain is None else domain
    labeling = open_clusters(config, model, domain, backend)
    label = labeling.cluster_at(np.zeros(config.dimension))
    if label is None:
        return EMPTY_CLUSTER
    members = labeling.members(label)
    censored = label in labeling.touching(BoxExterior(domain))
    diameter = float(cluster_diameters(config, labeling, tol)[label])
    if labeling.kind == 'lattice':
        volume = len(members) * labeling.spacing ** config.dimension
        return OriginClusterStats(diameter, volume, 0.0, censored, len(members))
    if sample_budget <= 0:
        return OriginClusterStats(diameter, 0.0, 0.0, censored, len(members))
    box = _member_bbox(config, members, domain, tol)
    rng = make_rng(seed)
    samples = box.lo + box.sides * rng.random((sample_budget, config.dimension))
    owners, _ = locate_many(config, samples, tol)
    fraction = float(np.mean(np.isin(owners, members)))
    volume = fraction * box.volume
    stderr = box.volume * math.sqrt(fraction * (1 - fraction) / sample_budget)
    return OriginClusterStats(diameter, volume, stderr, censored, len(members))


def origin_diameter(config, model, R, sample_budget=0, seed=0, backend=None):
    """The origin's cluster has finite diameter of at least ``R``."""
    stats = origin_cluster_stats(config, model, sample_budget, seed, backend)
    return not stats.censored and stats.diam_proxy >= R


def origin_volume(config, model, R, sample_budget=1000, seed=0, backend=None):
    """The origin's cluster has finite volume of at least ``R``."""
    stats = origin_cluster_stats(config, model, sample_budget, seed, backend)
    return not stats.censored and stats.vol_estimate >= R


def n_good(config, model, x, N, backend=None):
    '''
    The box ``Lambda_4N(2N x)`` holds a unique cluster of diameter larger
    than ``N / 4``, and that cluster meets every sub-box ``Lambda_N(2N y)``
    with ``|y - x|_inf <= 1``.
    '''
    d = config.dimension
    x = np.asarray(x, dtype=float).reshape(d)
    labeling = open_clusters(config, model, lam(4 * N, d, 2 * N * x), backend)
    big = np.flatnonzero(cluster_diameters(config, labeling) > N / 4.0)
    if len(big) != 1:
        return False
    label = int(big[0])
    offsets = np.stack(np.meshgrid(*[[-1, 0, 1]] * d, indexing='ij'), axis=-1).reshape(-1, d)
    return all(label in labeling.touching(lam(N, d, 2 * N * (x + y))) for y in offsets)


def large_cell(config, L, ell, tol=EPS_GEOM):
    """Some cell meeting ``Lambda_L`` has diameter at least ``ell``."""
    box = lam(L, config.dimension)
    check_domain(config, box)
    if config.n == 0:
        return False
    return any(cell_diameter_bound(config, x, tol) >= ell for x in cells_meeting_box(config, box, tol))


def cell_count(config, L, tol=EPS_GEOM):
    box = lam(L, config.dimension)
    check_domain(config, box)
    return len(cells_meeting_box(config, box, tol)) if config.n else 0


def cell_count_exceeds(config, L, C, tol=EPS_GEOM):
    """At least ``C L^d`` cells meet ``Lambda_L``."""
    return cell_count(config, L, tol) >= C * L ** config.dimension


_REGISTRY = {}


def register_event(name, detector, extent, increasing=False, tessellation=False):
    '''
    Make an event available to the estimators.

    :param detector: ``detector(config, model, backend, seed, **params)``
                     returning a bool or an ``(outcome, aux)`` pair
    :param extent: ``extent(dimension, **params)``, the radius of the box
                   centred at the origin that the detector inspects
    :param increasing: whether the event is increasing in ``p``
    :param tessellation: whether the detector reads cells directly rather
                         than only the open region of the model
    '''
    _REGISTRY[name] = EventSpec(name, detector, extent, increasing, tessellation)


def get_event(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValidationError('unknown event {0!r}; known events: {1}'.format(
            name, ', '.join(sorted(_REGISTRY))))


def event_names():
    return sorted(_REGISTRY)


def evaluate(name, config, model, backend=None, seed=0, **params):
    """Run a registered detector; returns an :class:`Outcome`."""
    result = get_event(name).detector(config, model, backend, seed, **params)
    if isinstance(result, tuple):
        return Outcome(bool(result[0]), result[1])
    return Outcome(bool(result), None)


def _with_count(config, model, backend, seed, L, strict=False):
    count = uniqueness_count(config, model, L, backend)
    return (count <= 1 if strict else count == 1), count


def _star(config, model, backend, seed, L, ell, kappa, threshold=None, conservative=False):
    outcome, good = star_connected_good_fraction(config, L, ell, kappa, threshold, conservative)
    return outcome, float(good.mean())


def _origin(field):
    def detector(config, model, backend, seed, R, sample_budget=1000):
        stats = origin_cluster_stats(config, model, sample_budget, seed, backend)
        return not stats.censored and getattr(stats, field) >= R, getattr(stats, field)
    return detector


register_event('crossing', lambda config, model, backend, seed, L, axis=0:
               box_crossing(config, model, L, axis, backend),
               lambda d, L, **kw: L, increasing=True)
register_event('connects', lambda config, model, backend, seed, r, R:
               connects(config, model, r, R, backend),
               lambda d, r, R: R, increasing=True)
register_event('slab_crossing', lambda config, model, backend, seed, L, M:
               slab_crossing(config, model, L, M, backend),
               lambda d, L, M: max(L, M), increasing=True)
register_event('uniqueness', _with_count, lambda d, L, **kw: 2 * L)
register_event('good_uniqueness', lambda config, model, backend, seed, L:
               good_uniqueness(config, model, L, backend),
               lambda d, L: 2 * L)
register_event('dense_cluster', lambda config, model, backend, seed, L, ell:
               dense_cluster(config, model, L, ell, backend),
               lambda d, L, ell: 2 * L, increasing=True)
register_event('chemdist', lambda config, model, backend, seed, R, M, conservative=False:
               chemical_distance_ok(config, R, M, conservative),
               lambda d, R, **kw: 2 * R, tessellation=True)
register_event('star_good', _star, lambda d, L, ell, **kw: L + 6 * ell, tessellation=True)
register_event('origin_diameter', _origin('diam_proxy'), lambda d, R, **kw: 2 * R)
register_event('origin_volume', _origin('vol_estimate'),
               lambda d, R, **kw: 2 * R ** (1.0 / d) + 2)
register_event('n_good', lambda config, model, backend, seed, N, x=None:
               n_good(config, model, np.zeros(config.dimension) if x is None else x, N, backend),
               lambda d, N, x=None: 4 * N + 2 * N * (0 if x is None else max(abs(v) for v in x)),
               increasing=False)
register_event('large_cell', lambda config, model, backend, seed, L, ell:
               large_cell(config, L, ell),
               lambda d, L, ell: L, tessellation=True)
register_event('cell_count_exceeds', lambda config, model, backend, seed, L, C:
               (cell_count(config, L) >= C * L ** config.dimension, cell_count(config, L)),
               lambda d, L, C: L, tessellation=True)
register_event('open_at', lambda config, model, backend, seed, x:
               membership(np.asarray(x, dtype=float), model, config),
               lambda d, x: max(1.0, max(abs(v) for v in x)))
