"""
Slow reference implementations.

Each function recomputes something the library does quickly, by the most
direct method available: empty circumcircles for the Delaunay graph, grid
sampling for cell adjacency, all-pairs shortest paths for chemical
distances, exhaustive search for components.  :func:`selftest` runs the
library against them.
"""

import logging
from collections import deque
from itertools import combinations, product

import networkx as nx
import numpy as np
from scipy import ndimage

from voroperc.backends import cellgraph_backend, lattice_backend
from voroperc.backends.tools import component_labels
from voroperc.cellgraph import build_cell_graph, cell_intersects_box, cells_meeting_box, grid_coloring, locate
from voroperc.constants import EPS_GEOM
from voroperc.events import box_crossing, chemical_distance_ok, lam
from voroperc.exceptions import InvariantViolation, ValidationError
from voroperc.models import continuum, membership_many, truncated
from voroperc.ppp import PointConfig, Window, make_rng, open_mask, sample_ppp

logger = logging.getLogger(__name__)

# off-grid shifts keeping lattice bisectors away from hZ^d sites
LATTICE_SHIFTS = {2: (0.0123, 0.0271), 3: (0.0123, 0.0271, 0.0389)}


def nearest_bruteforce(positions, y):
    """Id of the point nearest to ``y``, the smallest id among exact ties."""
    d2 = np.sum((np.asarray(positions, dtype=float) - y) ** 2, axis=1)
    return int(np.argmin(d2))


def circumcircle(a, b, c):
    '''
    Centre and radius of the circle through three points of the plane, or
    None when they are collinear.

    >>> center, r = circumcircle([0, 0], [2, 0], [0, 2])
    >>> center.tolist(), round(r ** 2, 12)
    ([1.0, 1.0], 2.0)
    '''
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    det = 2.0 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    if abs(det) < 1e-14:
        return None
    rb = np.sum((b - a) ** 2)
    rc = np.sum((c - a) ** 2)
    offset = np.array([(c[1] - a[1]) * rb - (b[1] - a[1]) * rc,
                       (b[0] - a[0]) * rc - (c[0] - a[0]) * rb]) / det
    return a + offset, float(np.linalg.norm(offset))


def delaunay_pairs(positions, tol=EPS_GEOM):
    '''
    Neighbouring cells of a planar configuration: pairs lying on a common
    circle with no point strictly inside.  Quartic in the number of points.

    Pairs of a cocircular quadruple's diagonals are included; they are the
    pairs a cell graph flags as degenerate.  Collinear configurations of
    more than two points are not handled.
    '''
    positions = np.asarray(positions, dtype=float)
    n, d = positions.shape
    if d != 2:
        raise ValidationError('empty-circle oracle is planar, got dimension {0}'.format(d))
    if n == 2:
        return {(0, 1)}
    pairs = set()
    for i, j, k in combinations(range(n), 3):
        circle = circumcircle(positions[i], positions[j], positions[k])
        if circle is None:
            continue
        center, r = circle
        inside = np.linalg.norm(positions - center, axis=1) < r - tol * (1 + r)
        inside[[i, j, k]] = False
        if not inside.any():
            pairs.update([(i, j), (i, k), (j, k)])
    return pairs


def lattice_adjacency(field):
    '''
    Pairs of owners of face-adjacent sites of a
    :class:`~voroperc.cellgraph.LatticeField`.
    '''
    values = field.values
    pairs = set()
    for axis in range(values.ndim):
        a = np.take(values, np.arange(values.shape[axis] - 1), axis=axis)
        b = np.take(values, np.arange(1, values.shape[axis]), axis=axis)
        differ = a != b
        for x, y in zip(np.minimum(a, b)[differ], np.maximum(a, b)[differ]):
            pairs.add((int(x), int(y)))
    return pairs


def partition(nodes, edges):
    """Connected components of a graph as a frozenset of frozensets."""
    G = nx.Graph()
    G.add_nodes_from(int(v) for v in nodes)
    G.add_edges_from((int(x), int(y)) for x, y in edges)
    return frozenset(frozenset(c) for c in nx.connected_components(G))


def lattice_partition(field, mask):
    '''
    Open clusters seen on a grid colouring: open owners present in
    ``field``, joined when they own face-adjacent sites.
    '''
    owners = [int(v) for v in np.unique(field.values) if mask[v]]
    edges = [(x, y) for x, y in lattice_adjacency(field) if mask[x] and mask[y]]
    return partition(owners, edges)


def labeling_partition(labeling):
    """The clusters of a :class:`~voroperc.backends.tools.ClusterLabeling` as sets of units."""
    groups = {}
    for unit, label in zip(labeling.units.tolist(), labeling.labels.tolist()):
        groups.setdefault(label, set()).add(unit)
    return frozenset(frozenset(g) for g in groups.values())


def open_cell_clusters(config, p, domain, tol=EPS_GEOM):
    '''
    Open clusters of ``continuum(p)`` inside the box ``domain`` as a
    partition of point ids, deciding one cell at a time which cells meet
    ``domain`` and joining open cells along cell graph edges.
    '''
    mask = open_mask(config, p)
    nodes = [x for x in range(config.n) if mask[x] and cell_intersects_box(config, x, domain, tol)]
    graph = build_cell_graph(config, domain, tol=tol)
    edges = [(x, y) for x, y in graph.edges.tolist() if mask[x] and mask[y]]
    return partition(nodes, edges)


def all_pairs_hops(n, edges):
    """Hop distances between ``0 .. n-1`` (inf when disconnected)."""
    G = nx.Graph()
    G.add_nodes_from(range(n))
    G.add_edges_from((int(x), int(y)) for x, y in edges)
    return nx.floyd_warshall_numpy(G, nodelist=list(range(n)))


def chemical_distance_bruteforce(config, R, M, tol=EPS_GEOM):
    """:func:`~voroperc.events.chemical_distance_ok` by all-pairs shortest paths."""
    d = config.dimension
    graph = build_cell_graph(config, lam(2 * R, d), tol=tol)
    hops = all_pairs_hops(config.n, graph.edges)
    sources = cells_meeting_box(config, lam(R, d), tol)
    if len(sources) == 0:
        return True
    return bool(np.max(hops[np.ix_(sources, sources)]) <= M)


def star_components(mask):
    '''
    Components of the true sites of a boolean array when diagonal
    neighbours count, by breadth-first search.

    >>> sorted(len(c) for c in star_components(np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]], bool)))
    [2]
    '''
    mask = np.asarray(mask, dtype=bool)
    steps = [s for s in product((-1, 0, 1), repeat=mask.ndim) if any(s)]
    seen = set()
    components = []
    for start in zip(*np.nonzero(mask)):
        start = tuple(int(i) for i in start)
        if start in seen:
            continue
        seen.add(start)
        component = {start}
        queue = deque([start])
        while queue:
            site = queue.popleft()
            for step in steps:
                nxt = tuple(i + s for i, s in zip(site, step))
                if nxt in seen or any(i < 0 or i >= k for i, k in zip(nxt, mask.shape)):
                    continue
                if mask[nxt]:
                    seen.add(nxt)
                    component.add(nxt)
                    queue.append(nxt)
        components.append(component)
    return components


def inclusion_violations(config, N, p, points):
    """Points open in ``truncated(N, p)`` but closed in ``continuum(p)``."""
    inner = membership_many(points, truncated(N, p), config)
    outer = membership_many(points, continuum(p), config)
    return int(np.sum(inner & ~outer))


def lattice_config(dimension, radius, margin, inset, rng):
    '''
    Shifted triangular (d = 2) or body-centred cubic (d = 3) lattice points
    in ``Window.centered(radius, dimension, margin)``.  Points farther than
    ``inset`` inside the analysis box get uniform marks and the rest mark 1,
    so every cell that can open lies inside the analysis box.
    '''
    window = Window.centered(radius, dimension, margin)
    reach = int(np.ceil(2 * (radius + margin))) + 1
    steps = np.arange(-reach, reach + 1)
    grid = np.stack([g.ravel() for g in np.meshgrid(*([steps] * dimension), indexing='ij')], axis=1)
    if dimension == 2:
        points = grid.dot([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    elif dimension == 3:
        points = np.vstack([grid, grid + 0.5])
    else:
        raise ValidationError('lattice configurations exist for d = 2, 3 only')
    points = points + LATTICE_SHIFTS[dimension]
    points = points[window.box.contains_interior(points)]
    inner = window.analysis.expand(-inset).contains(points)
    marks = np.where(inner, rng.random(len(points)), 1.0)
    return PointConfig(window, points, marks)


def _check(name, mismatches, cases):
    logger.info('selftest %s: %d cases, %d mismatches', name, cases, mismatches)
    if mismatches:
        raise InvariantViolation('selftest {0}: {1} mismatches in {2} cases'.format(name, mismatches, cases))
    return name, cases


def check_cell_graph(configs, method='dual'):
    mismatches = 0
    for config in configs:
        graph = build_cell_graph(config, method=method)
        expected = delaunay_pairs(config.positions) - graph.degenerate
        found = set(map(tuple, graph.edges.tolist())) - graph.degenerate
        mismatches += found != expected
    return _check('cell graph ({0})'.format(method), mismatches, len(configs))


def check_locate(configs, rng, queries=50):
    mismatches = 0
    for config in configs:
        for y in config.window.lo + config.window.sides * rng.random((queries, config.dimension)):
            mismatches += locate(config, y).id != nearest_bruteforce(config.positions, y)
    return _check('locate', mismatches, len(configs) * queries)


def check_union_find(rng, graphs=50, size=40):
    mismatches = 0
    for _ in range(graphs):
        edges = rng.integers(0, size, size=(rng.integers(0, 2 * size), 2))
        labels = component_labels(size, edges)
        groups = {}
        for unit, label in enumerate(labels.tolist()):
            groups.setdefault(label, set()).add(unit)
        found = frozenset(frozenset(g) for g in groups.values())
        mismatches += found != partition(range(size), edges)
    return _check('union-find', mismatches, graphs)


def check_star(rng, masks=50, shape=(12, 12)):
    mismatches = 0
    for _ in range(masks):
        mask = rng.random(shape) < 0.3
        labeled, count = ndimage.label(mask, structure=np.ones((3,) * mask.ndim))
        expected = sorted(len(c) for c in star_components(mask))
        mismatches += sorted(np.bincount(labeled.ravel())[1:].tolist()) != expected
    return _check('star components', mismatches, masks)


def check_chemical_distance(configs, R, M):
    mismatches = sum(chemical_distance_ok(config, R, M) != chemical_distance_bruteforce(config, R, M)
                     for config in configs)
    return _check('chemical distance', mismatches, len(configs))


def check_inclusion(configs, N, levels, rng, points=1000):
    mismatches = 0
    for config in configs:
        box = config.window.analysis
        ys = box.lo + box.sides * rng.random((points, config.dimension))
        for p in levels:
            mismatches += inclusion_violations(config, N, p, ys)
    return _check('truncated inclusion', mismatches, len(configs) * len(levels) * points)


def check_monotone_crossing(configs, L, levels):
    mismatches = 0
    for config in configs:
        outcomes = [box_crossing(config, continuum(p), L) for p in levels]
        mismatches += any(a and not b for a, b in zip(outcomes, outcomes[1:]))
    return _check('monotone crossing', mismatches, len(configs))


def check_backends(configs, levels, h):
    '''
    Open clusters of the cell graph backend, of the lattice backend and of a
    grid colouring of each configuration's analysis box.  Grid sites stand
    for their owners.
    '''
    mismatches = 0
    for config in configs:
        domain = config.window.analysis
        field = grid_coloring(config, domain, h)
        owners = field.values.ravel()
        for p in levels:
            model = continuum(p)
            cells = labeling_partition(cellgraph_backend()(config, model, domain))
            sites = labeling_partition(lattice_backend(h)(config, model, domain))
            seen = frozenset(frozenset(owners[sorted(c)].tolist()) for c in sites)
            mismatches += not (cells == seen == lattice_partition(field, open_mask(config, p)))
    name = 'backends (d={0})'.format(configs[0].dimension if configs else '-')
    return _check(name, mismatches, len(configs) * len(levels))


def selftest(seed=0, configs=20):
    '''
    Run every oracle comparison on small random configurations.

    :returns: list of ``(check name, cases)``
    :raises InvariantViolation: on the first check with a mismatch
    '''
    rng = make_rng(seed)
    small = [sample_ppp(Window.centered(2.5, 2), seed=int(s)) for s in rng.integers(0, 2 ** 31, configs)]
    small = [c for c in small if c.n >= 3]
    medium = [sample_ppp(Window.centered(6.0, 2, margin=4.0), seed=int(s))
              for s in rng.integers(0, 2 ** 31, max(1, configs // 4))]
    aligned = [sample_ppp(Window.centered(8.0, 2, margin=8.0), seed=int(s))
               for s in rng.integers(0, 2 ** 31, max(1, configs // 4))]
    planar = [lattice_config(2, 3.0, 2.0, 0.7, rng) for _ in range(max(1, configs // 10))]
    cubic = [lattice_config(3, 1.6, 1.9, 0.7, rng)]
    return [
        check_cell_graph(small, 'dual'),
        check_cell_graph(small, 'radius'),
        check_locate(small, rng),
        check_union_find(rng),
        check_star(rng),
        check_chemical_distance(medium, 1.0, 3),
        check_inclusion(aligned, 4, (0.3, 0.5, 0.7), rng),
        check_monotone_crossing(medium, 2.0, [0.1 * i for i in range(1, 10)]),
        check_backends(planar, (0.3, 0.6, 0.9), 0.05),
        check_backends(cubic, (0.4, 0.8), 0.1),
    ]
