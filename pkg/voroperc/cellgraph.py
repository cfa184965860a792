"""
Voronoi adjacency graph of a point configuration.

Two cells are adjacent when they share a face of full dimension ``d - 1``.
Every edge carries a *witness*: a point on the bisector whose nearest
configuration points are exactly the two sites of the edge, checked against
the whole configuration.  Faces thinner than :data:`~voroperc.constants.EPS_GEOM`
are not edges; they are recorded as degenerate pairs instead.

Edges are found in one of two ways:

``dual``
    Candidate pairs come from :class:`scipy.spatial.Delaunay`.  The mean of a
    bounded face's vertices (the circumcentres around the pair), or of the
    face cut to the domain, is certified with a k-d tree query; anything that
    cannot be certified this way goes to the linear program.  Inside a
    certified domain (see :func:`certify_box`) unbounded faces are dropped
    without one.

``radius``
    Candidate pairs come from the spatial hash, within twice the circumradius
    of each cell's bounding box, and every pair is decided by the linear
    program.
"""

import csv
import json
import logging
from collections import namedtuple

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay, QhullError
from scipy.spatial.distance import pdist

from voroperc.constants import (CANDIDATE_RADIUS_FACTOR, CLIP_POINT_CAP, EPS_GEOM,
                                FLOAT_DIGITS, GRID_SITE_CAP, SEPARATOR_CANDIDATES, SLACK_CAP)
from voroperc.exceptions import BudgetExceeded, ValidationError
from voroperc.feasibility import bisector_rows, box_rows, chebyshev_slack, support_box
from voroperc.regions import Box

logger = logging.getLogger(__name__)

Location = namedtuple('Location', ['id', 'degenerate'])
Face = namedtuple('Face', ['witness', 'slack', 'degenerate'])


def _check_id(config, x):
    if int(x) != x or not 0 <= x < config.n:
        raise ValidationError('point id {0} out of range for {1} points'.format(x, config.n))
    return int(x)


def _check_nonempty(config):
    if config.n == 0:
        raise ValidationError('empty configuration')


def locate(config, y, tol=EPS_GEOM):
    '''
    The id of the configuration point nearest to ``y``.

    When the two smallest distances agree within ``tol * (1 + distance)`` the
    smaller id wins and :attr:`Location.degenerate` is set.
    '''
    _check_nonempty(config)
    ids, dist = config.nearest(np.asarray(y, dtype=float), k=2)
    if len(ids) == 1 or dist[1] - dist[0] > tol * (1 + dist[0]):
        return Location(int(ids[0]), False)
    return Location(int(min(ids[0], ids[1])), True)


def _owners(config, points, tol):
    dist, ids = config.nearest_many(points, k=min(2, config.n))
    if config.n == 1:
        return ids[:, 0], np.zeros(len(points), dtype=bool), dist[:, 0]
    tie = dist[:, 1] - dist[:, 0] <= tol * (1 + dist[:, 0])
    return np.where(tie, np.minimum(ids[:, 0], ids[:, 1]), ids[:, 0]), tie, dist[:, 0]


def locate_many(config, points, tol=EPS_GEOM):
    """Vectorised :func:`locate`: ``(owners, degenerate)`` arrays."""
    _check_nonempty(config)
    owners, tie, _ = _owners(config, np.asarray(points, dtype=float).reshape(-1, config.dimension), tol)
    return owners, tie


def _nearest_gap(config, x):
    ids, dist = config.nearest(config.positions[x], k=2)
    if dist[1] == 0:
        raise ValidationError('point {0} coincides with point {1}'.format(x, ids[1]))
    return dist[1]


def _certified_optimum(config, x, candidates, extra=None, partner=None, tol=EPS_GEOM):
    '''
    Chebyshev slack over the cell of ``x`` cut by ``extra`` rows (and by the
    bisector with ``partner`` when given).  Competitors are added until the
    optimiser has no configuration point strictly closer than ``x``.

    :returns: ``(z, t)``; ``z`` is None when ``t < -tol``
    '''
    positions = config.positions
    px = positions[x]
    candidates = set(int(w) for w in candidates)
    candidates.discard(x)
    candidates.discard(partner)
    a = A_eq = b_eq = None
    if partner is not None:
        a = positions[partner] - px
        A_eq, b_eq = 2.0 * a, np.dot(a, a)
    while True:
        others = np.array(sorted(candidates), dtype=int)
        A, b = bisector_rows(positions[others].reshape(-1, config.dimension) - px)
        if extra is not None:
            A, b = np.vstack([A, extra[0]]), np.concatenate([b, extra[1]])
        z, t = chebyshev_slack(A, b, A_eq, b_eq)
        if t < -tol:
            return None, t
        if a is not None:
            z = z - (np.dot(a, z) - 0.5 * np.dot(a, a)) / np.dot(a, a) * a
        z = px + z
        reach = np.linalg.norm(z - px)
        near = config.index.within(z, reach * (1 + tol) + tol)
        new = [int(w) for w in near if w != x and w != partner and w not in candidates]
        if not new:
            return z, t
        logger.debug('certifying site %d adds %d competitors', x, len(new))
        candidates.update(new)


def face_of(config, x, y, domain=None, tol=EPS_GEOM):
    '''
    Decide whether the cells of ``x`` and ``y`` share a face (inside
    ``domain`` when given).

    :returns: a :class:`Face`; ``witness`` is None for non-edges and
              ``degenerate`` is set when the shared region is thinner than
              ``tol``
    '''
    x = _check_id(config, x)
    y = _check_id(config, y)
    if x == y:
        raise ValidationError('a cell is not adjacent to itself')
    px, py = config.positions[x], config.positions[y]
    gap = np.linalg.norm(py - px)
    if gap == 0:
        raise ValidationError('point {0} coincides with point {1}'.format(x, y))
    candidates = config.index.within(0.5 * (px + py), CANDIDATE_RADIUS_FACTOR * gap)
    extra = None if domain is None else box_rows(domain.lo - px, domain.hi - px)
    z, t = _certified_optimum(config, x, candidates, extra, y, tol)
    if z is None:
        return Face(None, t, False)
    if t <= tol:
        return Face(None, t, True)
    return Face(z, t, False)


def adjacent_pair(config, x, y, domain=None, tol=EPS_GEOM):
    """Witness of the face shared by ``x`` and ``y``, or None."""
    return face_of(config, x, y, domain, tol).witness


class VoronoiDual(object):
    '''
    Delaunay dual of a configuration with certified circumcentres.

    A circumcentre is certified when no configuration point lies strictly
    inside its circumball.  A cell is *certified* when it is bounded and all
    its vertices are certified; its vertices are then exact.
    '''

    def __init__(self, config, tri, tol=EPS_GEOM):
        positions = config.positions
        n, d = positions.shape
        simplices = tri.simplices
        m = len(simplices)
        verts = positions[simplices]
        spans = verts[:, 1:] - verts[:, :1]
        M = 2.0 * spans
        rhs = np.einsum('mij,mij->mi', spans, spans)
        scale = np.prod(np.linalg.norm(M, axis=2), axis=1)
        solvable = np.abs(np.linalg.det(M)) > 1e-12 * scale
        centers = np.full((m, d), np.nan)
        if solvable.any():
            centers[solvable] = verts[solvable, 0] + np.linalg.solve(
                M[solvable], rhs[solvable][..., None])[..., 0]
        radii = np.linalg.norm(centers - verts[:, 0], axis=1)
        certified = solvable.copy()
        if solvable.any():
            nn, _ = config.nearest_many(centers[solvable], k=1)
            certified[solvable] = nn[:, 0] >= radii[solvable] - tol * (1 + radii[solvable])
        self.tri = tri
        self.centers = centers
        self.radii = radii
        self.certified = certified

        # point -> incident simplices
        flat = simplices.ravel()
        simplex_of = np.repeat(np.arange(m), d + 1)
        order = np.argsort(flat, kind='stable')
        self.incidence_points = flat
        self.incidence_simplices = simplex_of
        self._incident = simplex_of[order]
        self._incident_ptr = np.concatenate(([0], np.cumsum(np.bincount(flat, minlength=n))))
        self.hull_points = np.zeros(n, dtype=bool)
        self.hull_points[np.unique(tri.convex_hull)] = True
        uncertified = np.bincount(flat, weights=(~certified[simplex_of]).astype(float), minlength=n)
        self.cell_certified = (uncertified == 0) & ~self.hull_points
        with np.errstate(invalid='ignore'):
            self.cell_lo = np.full((n, d), np.inf)
            self.cell_hi = np.full((n, d), -np.inf)
            np.minimum.at(self.cell_lo, flat, centers[simplex_of])
            np.maximum.at(self.cell_hi, flat, centers[simplex_of])

        # pair -> incident simplices
        iu, ju = np.triu_indices(d + 1, k=1)
        first, second = simplices[:, iu].ravel(), simplices[:, ju].ravel()
        pairs = np.stack([np.minimum(first, second), np.maximum(first, second)], axis=1)
        pair_simplex = np.repeat(np.arange(m), len(iu))
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        k = len(edges)
        count = np.bincount(inverse, minlength=k)
        total = np.zeros((k, d))
        np.add.at(total, inverse, centers[pair_simplex])
        self.edges = edges
        self.face_mean = total / count[:, None]
        with np.errstate(invalid='ignore'):
            self.face_lo = np.full((k, d), np.inf)
            self.face_hi = np.full((k, d), -np.inf)
            np.minimum.at(self.face_lo, inverse, centers[pair_simplex])
            np.maximum.at(self.face_hi, inverse, centers[pair_simplex])
        face_uncertified = np.bincount(inverse, weights=(~certified[pair_simplex]).astype(float), minlength=k)
        self._face_order = pair_simplex[np.argsort(inverse, kind='stable')]
        self._face_ptr = np.concatenate(([0], np.cumsum(count)))

        facets = tri.convex_hull
        fi, fj = np.triu_indices(facets.shape[1], k=1)
        a, b = facets[:, fi].ravel(), facets[:, fj].ravel()
        hull_keys = np.minimum(a, b).astype(np.int64) * n + np.maximum(a, b)
        on_hull = np.isin(edges[:, 0].astype(np.int64) * n + edges[:, 1], hull_keys)
        self.bounded_face = (face_uncertified == 0) & ~on_hull

    def cell_vertices(self, x):
        return self.centers[self._incident[self._incident_ptr[x]:self._incident_ptr[x + 1]]]

    def face_vertices(self, j):
        return self.centers[self._face_order[self._face_ptr[j]:self._face_ptr[j + 1]]]

    def neighbours(self, x):
        indptr, indices = self.tri.vertex_neighbor_vertices
        return indices[indptr[x]:indptr[x + 1]]


def voronoi_dual(config, tol=EPS_GEOM):
    '''
    The cached :class:`VoronoiDual` of ``config``, or None when Qhull cannot
    triangulate it (too few points, all points in a hyperplane, coincident
    points).
    '''
    def factory():
        if config.n < config.dimension + 1:
            return None
        try:
            tri = Delaunay(config.positions)
        except (QhullError, ValueError) as exc:
            logger.debug('no Delaunay dual for %r: %s', config, exc)
            return None
        if len(tri.coplanar):
            logger.debug('Delaunay dropped %d points; using the LP path', len(tri.coplanar))
            return None
        return VoronoiDual(config, tri, tol)
    return config.cached(('dual', tol), factory)


def _certify_witnesses(config, pairs, witnesses, tol):
    k = min(3, config.n)
    dist, ids = config.nearest_many(witnesses, k=k)
    ok = np.all(np.sort(ids[:, :2], axis=1) == pairs, axis=1)
    ok &= dist[:, 1] - dist[:, 0] <= tol * (1 + dist[:, 0])
    if k < 3:
        return ok, np.full(len(pairs), SLACK_CAP)
    clearance = dist[:, 2] - dist[:, 1]
    ok &= clearance > tol * (1 + dist[:, 1])
    return ok, np.minimum(clearance, SLACK_CAP)


def _clipped_witness(vertices, domain, tol):
    '''
    Mean of the face vertices inside ``domain`` together with the clipped
    chords between every pair of vertices; None when the result is not
    strictly inside the domain.
    '''
    if len(vertices) > CLIP_POINT_CAP:
        return None
    points = [vertices[domain.contains(vertices)]]
    iu, ju = np.triu_indices(len(vertices), k=1)
    start, delta = vertices[iu], vertices[ju] - vertices[iu]
    parallel = delta == 0
    with np.errstate(divide='ignore', invalid='ignore'):
        s_lo = (domain.lo - start) / delta
        s_hi = (domain.hi - start) / delta
    enter = np.where(parallel, -np.inf, np.minimum(s_lo, s_hi)).max(axis=1, initial=-np.inf)
    leave = np.where(parallel, np.inf, np.maximum(s_lo, s_hi)).min(axis=1, initial=np.inf)
    outside = np.any(parallel & ((start < domain.lo) | (start > domain.hi)), axis=1)
    s0, s1 = np.maximum(enter, 0.0), np.minimum(leave, 1.0)
    hit = (s0 <= s1) & ~outside
    points.append(start[hit] + s0[hit, None] * delta[hit])
    points.append(start[hit] + s1[hit, None] * delta[hit])
    points = np.vstack(points)
    if len(points) == 0 or len(points) > CLIP_POINT_CAP:
        return None
    z = points.mean(axis=0)
    if not domain.contains_interior(z, tol):
        return None
    return z


def _ordered_polygon(vertices, normal=None):
    '''
    Vertices of a convex polygon in angular order around their mean.  In
    three dimensions the polygon lies in the plane orthogonal to ``normal``.
    '''
    rel = vertices - vertices.mean(axis=0)
    if normal is None:
        u, v = rel[:, 0], rel[:, 1]
    else:
        n = normal / np.linalg.norm(normal)
        e1 = np.cross(n, np.eye(3)[np.argmin(np.abs(n))])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        u, v = rel.dot(e1), rel.dot(e2)
    return vertices[np.argsort(np.arctan2(v, u), kind='stable')]


def _clip_polygon(polygon, lo, hi):
    """Sutherland-Hodgman cut of an ordered convex polygon to the box ``[lo, hi]``."""
    poly = list(polygon)
    for i in range(len(lo)):
        for sign, bound in ((1.0, hi[i]), (-1.0, lo[i])):
            out = []
            for k in range(len(poly)):
                cur, nxt = poly[k], poly[(k + 1) % len(poly)]
                fc, fn = sign * (cur[i] - bound), sign * (nxt[i] - bound)
                if fc <= 0:
                    out.append(cur)
                if fc < 0 < fn or fn < 0 < fc:
                    out.append(cur + fc / (fc - fn) * (nxt - cur))
            poly = out
            if not poly:
                return np.zeros((0, len(lo)))
    return np.array(poly)


def _clip_face(vertices, normal, domain, tol):
    '''
    Cut a bounded face, given by its vertices and the normal of its bisector,
    to ``domain`` grown by ``tol``.

    :returns: ``(meets, z)``; ``meets`` is False only when the face certainly
              misses the domain, ``z`` is the mean of the cut face when it
              lies strictly inside the domain and None otherwise
    '''
    d = len(normal)
    if d == 2:
        along = vertices.dot([-normal[1], normal[0]])
        polygon = vertices[[np.argmin(along), np.argmax(along)]]
    elif d == 3 and len(vertices) <= CLIP_POINT_CAP:
        polygon = _ordered_polygon(vertices, normal)
    else:
        return True, _clipped_witness(vertices, domain, tol)
    cut = _clip_polygon(polygon, domain.lo - tol, domain.hi + tol)
    if len(cut) == 0:
        return False, None
    z = cut.mean(axis=0)
    if not domain.contains_interior(z, tol):
        return True, None
    return True, z


def _project_to_bisectors(config, pairs, witnesses):
    px, py = config.positions[pairs[:, 0]], config.positions[pairs[:, 1]]
    a = py - px
    offset = np.einsum('ij,ij->i', witnesses - 0.5 * (px + py), a) / np.einsum('ij,ij->i', a, a)
    return witnesses - offset[:, None] * a


def _dual_faces(config, dual, domain, tol):
    pairs = dual.edges
    fast = dual.bounded_face.copy()
    witness = dual.face_mean.copy()
    skip = np.zeros(len(pairs), dtype=bool)
    if domain is not None:
        with np.errstate(invalid='ignore'):
            misses = (np.any(dual.face_hi < domain.lo - tol, axis=1)
                      | np.any(dual.face_lo > domain.hi + tol, axis=1))
        skip = fast & misses
        if within_certified(config, domain, tol):
            # every face meeting a certified domain is bounded
            skip |= ~dual.bounded_face
        fast &= ~skip
        positions = config.positions
        for j in np.flatnonzero(fast & ~domain.contains_interior(witness, tol)):
            x, y = pairs[j]
            meets, z = _clip_face(dual.face_vertices(j), positions[y] - positions[x], domain, tol)
            if not meets:
                skip[j] = True
                fast[j] = False
            elif z is None:
                fast[j] = False
            else:
                witness[j] = z
    ok = np.zeros(len(pairs), dtype=bool)
    slack = np.zeros(len(pairs))
    idx = np.flatnonzero(fast)
    if len(idx):
        witness[idx] = _project_to_bisectors(config, pairs[idx], witness[idx])
        ok[idx], slack[idx] = _certify_witnesses(config, pairs[idx], witness[idx], tol)
        if domain is not None:
            ok[idx] &= domain.contains(witness[idx])

    edges = [pairs[ok]]
    witnesses = [witness[ok]]
    slacks = [slack[ok]]
    degenerate = []
    rest = np.flatnonzero(~ok & ~skip)
    logger.debug('dual path: %d certified faces, %d sent to the LP', ok.sum(), len(rest))
    for j in rest:
        x, y = pairs[j]
        face = face_of(config, x, y, domain, tol)
        if face.witness is not None:
            edges.append(pairs[j:j + 1])
            witnesses.append(face.witness[None, :])
            slacks.append([face.slack])
        elif face.degenerate:
            degenerate.append((int(x), int(y)))
    return np.vstack(edges), np.vstack(witnesses), np.concatenate(slacks), degenerate


def _cell_extent(config, x):
    '''
    Bounding box of the cell of ``x`` relative to its site, and the ids of
    every point that can be a neighbour of ``x``.

    The box is computed from competitors within a radius ``rho`` that grows
    until ``rho`` is at least twice the distance to the box's farthest corner;
    fewer competitors only enlarge the cell, so the final box is exact.
    '''
    positions = config.positions
    px = positions[x]
    d = config.dimension
    others = np.delete(np.arange(config.n), x)
    if len(others) == 0:
        return np.full(d, -np.inf), np.full(d, np.inf), others
    far = np.max(np.linalg.norm(positions[others] - px, axis=1))
    rho = CANDIDATE_RADIUS_FACTOR * _nearest_gap(config, x)
    while True:
        candidates = config.index.within(px, rho)
        candidates = candidates[candidates != x]
        lo, hi = support_box(positions[candidates] - px, far)
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            reach = np.linalg.norm(np.maximum(-lo, hi))
            if 2 * reach <= rho or rho >= far:
                neighbours = config.index.within(px, 2 * reach)
                return lo, hi, neighbours[neighbours != x]
            rho = 2 * reach
        elif rho >= far:
            return lo, hi, others
        else:
            rho *= 2


def cell_bbox(config, x):
    """Axis-aligned bounding box ``(lo, hi)`` of the cell of ``x``; infinite when unbounded."""
    x = _check_id(config, x)
    lo, hi, _ = _cell_extent(config, x)
    return config.positions[x] + lo, config.positions[x] + hi


def _radius_faces(config, domain, tol):
    edges, witnesses, slacks, degenerate = [], [], [], []
    for x in range(config.n):
        lo, hi, neighbours = _cell_extent(config, x)
        if domain is not None:
            px = config.positions[x]
            bbox = Box(np.maximum(px + lo, -1e300), np.minimum(px + hi, 1e300))
            if not bbox.intersects(domain, tol):
                continue
        for y in neighbours[neighbours > x]:
            face = face_of(config, x, y, domain, tol)
            if face.witness is not None:
                edges.append((x, int(y)))
                witnesses.append(face.witness)
                slacks.append(face.slack)
            elif face.degenerate:
                degenerate.append((x, int(y)))
    d = config.dimension
    return (np.array(edges, dtype=int).reshape(-1, 2), np.array(witnesses).reshape(-1, d),
            np.array(slacks, dtype=float), degenerate)


class CellGraph(object):
    '''
    Adjacency graph of Voronoi cells.

    .. attribute:: edges

       ``(k, 2)`` array of id pairs with ``x < y``, lexicographically sorted.

    .. attribute:: witnesses

       ``(k, d)`` array; row ``i`` is the witness of ``edges[i]``.

    .. attribute:: slack

       Thickness certificate of each face: the LP slack or the nearest-point
       clearance at the witness, capped at :data:`~voroperc.constants.SLACK_CAP`.

    .. attribute:: degenerate

       Frozen set of pairs whose shared region is thinner than the tolerance.
    '''

    def __init__(self, config, edges, witnesses, slack, degenerate=(), domain=None,
                 tol=EPS_GEOM, method='dual'):
        edges = np.asarray(edges, dtype=int).reshape(-1, 2)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        self.config = config
        self.domain = domain
        self.tol = tol
        self.method = method
        self.edges = edges[order]
        self.witnesses = np.asarray(witnesses, dtype=float).reshape(-1, config.dimension)[order]
        self.slack = np.asarray(slack, dtype=float).reshape(-1)[order]
        self.degenerate = frozenset((min(x, y), max(x, y)) for x, y in degenerate)
        self._lookup = dict(((int(x), int(y)), i) for i, (x, y) in enumerate(self.edges))
        self._adjacency = None

    def __len__(self):
        return len(self.edges)

    @property
    def adjacency(self):
        """List of sorted neighbour arrays, one per point."""
        if self._adjacency is None:
            both = np.vstack([self.edges, self.edges[:, ::-1]])
            both = both[np.lexsort((both[:, 1], both[:, 0]))]
            counts = np.bincount(both[:, 0], minlength=self.config.n)
            self._adjacency = np.split(both[:, 1], np.cumsum(counts)[:-1])
        return self._adjacency

    def neighbours(self, x):
        return self.adjacency[x]

    def has_edge(self, x, y):
        return (min(x, y), max(x, y)) in self._lookup

    def witness(self, x, y):
        i = self._lookup.get((min(x, y), max(x, y)))
        return None if i is None else self.witnesses[i]

    def open_edges(self, mask):
        """Edges whose two ends are selected by the boolean ``mask``."""
        return self.edges[mask[self.edges[:, 0]] & mask[self.edges[:, 1]]]

    def to_networkx(self, mask=None):
        graph = nx.Graph()
        if mask is None:
            graph.add_nodes_from(range(self.config.n))
            graph.add_edges_from(self.edges.tolist())
        else:
            graph.add_nodes_from(np.flatnonzero(mask).tolist())
            graph.add_edges_from(self.open_edges(mask).tolist())
        return graph

    def dump(self, path):
        '''
        Write ``x_id,y_id,z1..zd,degenerate`` rows: every edge with its
        witness, then every degenerate pair with empty witness columns.
        '''
        d = self.config.dimension
        fmt = '{0:.%dg}' % FLOAT_DIGITS
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['x_id', 'y_id'] + ['z{0}'.format(i + 1) for i in range(d)] + ['degenerate'])
            for (x, y), z in zip(self.edges, self.witnesses):
                writer.writerow([x, y] + [fmt.format(v) for v in z] + [0])
            for x, y in sorted(self.degenerate):
                writer.writerow([x, y] + [''] * d + [1])

    def __repr__(self):
        return '<CellGraph {0} edges, {1} degenerate>'.format(len(self), len(self.degenerate))


def build_cell_graph(config, domain=None, method='dual', tol=EPS_GEOM):
    '''
    The Voronoi adjacency graph of ``config``; cached on the configuration.

    :param domain: optional :class:`~voroperc.regions.Box`; witnesses are
                   then constrained to it and faces missing it are dropped
    :param method: ``'dual'`` or ``'radius'``
    '''
    _check_nonempty(config)
    if method not in ('dual', 'radius'):
        raise ValidationError('unknown cell graph method {0!r}'.format(method))
    if domain is not None and domain.dimension != config.dimension:
        raise ValidationError('domain dimension {0} != {1}'.format(domain.dimension, config.dimension))

    def factory():
        dual = voronoi_dual(config, tol) if method == 'dual' else None
        if config.n == 1:
            parts = (np.zeros((0, 2), dtype=int), np.zeros((0, config.dimension)), np.zeros(0), [])
        elif dual is not None:
            parts = _dual_faces(config, dual, domain, tol)
        else:
            parts = _radius_faces(config, domain, tol)
        graph = CellGraph(config, *parts, domain=domain, tol=tol, method=method)
        logger.debug('built %r for %r', graph, config)
        return graph

    key = ('cellgraph', None if domain is None else domain.key(), method, tol)
    return config.cached(key, factory)


def cell_intersects_box(config, x, box, tol=EPS_GEOM):
    """Whether the cell of ``x`` meets ``box`` (within ``tol``)."""
    x = _check_id(config, x)
    if box.dimension != config.dimension:
        raise ValidationError('box dimension {0} != {1}'.format(box.dimension, config.dimension))
    px = config.positions[x]
    if config.n == 1 or box.contains(px, tol):
        return True
    dual = voronoi_dual(config, tol)
    if dual is not None and dual.cell_certified[x]:
        if np.any(dual.cell_hi[x] < box.lo - tol) or np.any(dual.cell_lo[x] > box.hi + tol):
            return False
        if np.any(box.contains(dual.cell_vertices(x), tol)):
            return True
        candidates = dual.neighbours(x)
    else:
        candidates = config.index.within(px, CANDIDATE_RADIUS_FACTOR * _nearest_gap(config, x))
    near, _ = config.nearest(np.clip(px, box.lo, box.hi), k=SEPARATOR_CANDIDATES)
    if _bisector_separates(config, x, np.concatenate([candidates, near]), box, tol):
        return False
    z, _ = _certified_optimum(config, x, candidates, box_rows(box.lo - px, box.hi - px), None, tol)
    return z is not None


def _bisector_separates(config, x, others, box, tol):
    '''
    Whether a single bisector half-space of ``x`` against one of ``others``
    excludes all of ``box``, which proves the cell of ``x`` misses it.
    '''
    others = np.unique(np.asarray(others, dtype=int))
    others = others[others != x]
    if len(others) == 0:
        return False
    px, q = config.positions[x], config.positions[others]
    a = q - px
    rhs = 0.5 * (np.einsum('ij,ij->i', q, q) - np.dot(px, px))
    low = np.where(a > 0, a * (box.lo - tol), a * (box.hi + tol)).sum(axis=1)
    return bool(np.any(low > rhs + tol * (1 + np.abs(rhs))))


def cell_escapes_box(config, x, box, domain=None, tol=EPS_GEOM):
    '''
    Whether the cell of ``x``, cut to ``domain`` when given, reaches the
    complement of the interior of ``box``.
    '''
    x = _check_id(config, x)
    px = config.positions[x]
    if not box.contains_interior(px, tol) and (domain is None or domain.contains(px, tol)):
        return True
    if config.n == 1:
        return domain is None or not np.all(box.contains_interior(domain.corners(), tol))
    dual = voronoi_dual(config, tol)
    if dual is not None:
        candidates = dual.neighbours(x)
    else:
        candidates = config.index.within(px, CANDIDATE_RADIUS_FACTOR * _nearest_gap(config, x))
    base = None if domain is None else box_rows(domain.lo - px, domain.hi - px)
    d = config.dimension
    for i in range(d):
        for sign, bound in ((1.0, box.hi[i]), (-1.0, box.lo[i])):
            row = np.zeros((1, d))
            row[0, i] = -sign
            rhs = np.array([-sign * (bound - px[i])])
            extra = (row, rhs) if base is None else (np.vstack([base[0], row]),
                                                     np.concatenate([base[1], rhs]))
            z, _ = _certified_optimum(config, x, candidates, extra, None, tol)
            if z is not None:
                return True
    return False


def _incident_any(dual, n, flags):
    """Per point: whether the flag of any incident cell vertex is set."""
    weights = np.asarray(flags, dtype=float)[dual.incidence_simplices]
    return np.bincount(dual.incidence_points, weights=weights, minlength=n) > 0


def cells_meet_box(config, ids, box, tol=EPS_GEOM):
    '''
    Vectorised :func:`cell_intersects_box` over ``ids``.  Certified cells
    are decided from their vertices; the rest go to the exact test.
    '''
    ids = np.asarray(ids, dtype=int)
    result = box.contains(config.positions[ids], tol)
    undecided = ~result
    dual = voronoi_dual(config, tol)
    if dual is not None and len(ids):
        with np.errstate(invalid='ignore'):
            vertex_hit = _incident_any(dual, config.n, box.contains(dual.centers, tol))[ids]
            misses = (np.any(dual.cell_hi[ids] < box.lo - tol, axis=1)
                      | np.any(dual.cell_lo[ids] > box.hi + tol, axis=1))
        certified = dual.cell_certified[ids]
        result |= undecided & certified & vertex_hit
        undecided &= ~(certified & (vertex_hit | misses))
        if undecided.any() and within_certified(config, box, tol):
            undecided &= certified
    for j in np.flatnonzero(undecided):
        result[j] = cell_intersects_box(config, ids[j], box, tol)
    return result


def cells_escape_box(config, ids, box, domain=None, tol=EPS_GEOM):
    """Vectorised :func:`cell_escapes_box` over ``ids``."""
    ids = np.asarray(ids, dtype=int)
    positions = config.positions[ids]
    result = ~box.contains_interior(positions, tol)
    if domain is not None:
        result &= domain.contains(positions, tol)
    undecided = ~result
    dual = voronoi_dual(config, tol)
    if dual is not None and len(ids):
        with np.errstate(invalid='ignore'):
            inside = box.contains_interior(dual.centers, tol)
            outside = ~inside if domain is None else ~inside & domain.contains(dual.centers, tol)
        all_inside = ~_incident_any(dual, config.n, ~inside)[ids]
        some_outside = _incident_any(dual, config.n, outside)[ids]
        certified = dual.cell_certified[ids]
        result |= undecided & certified & some_outside
        undecided &= ~(certified & (all_inside | some_outside))
        if domain is None:
            result |= undecided & dual.hull_points[ids]
            undecided &= ~dual.hull_points[ids]
        elif undecided.any() and within_certified(config, domain, tol):
            # the cut of an uncertified cell to a certified domain is empty
            undecided &= certified
    for j in np.flatnonzero(undecided):
        result[j] = cell_escapes_box(config, ids[j], box, domain, tol)
    return result


def cells_meeting_box(config, box, tol=EPS_GEOM):
    """Sorted ids of the points whose cells meet ``box``."""
    _check_nonempty(config)
    ids = np.arange(config.n)
    dual = voronoi_dual(config, tol)
    if dual is not None:
        with np.errstate(invalid='ignore'):
            misses = dual.cell_certified & (np.any(dual.cell_hi < box.lo - tol, axis=1)
                                           | np.any(dual.cell_lo > box.hi + tol, axis=1))
        ids = ids[~misses]
    return ids[cells_meet_box(config, ids, box, tol)]


def cell_diameter_bound(config, x, tol=EPS_GEOM):
    '''
    Upper bound on the diameter of the cell of ``x``; ``inf`` for unbounded
    cells.  Exact within ``2 * tol`` when the cell's vertices are certified,
    otherwise the diagonal of its bounding box.
    '''
    x = _check_id(config, x)
    if config.n == 1:
        return np.inf
    dual = voronoi_dual(config, tol)
    if dual is not None:
        if dual.hull_points[x]:
            return np.inf
        if dual.cell_certified[x]:
            vertices = dual.cell_vertices(x)
            return float(pdist(vertices).max()) + 2 * tol if len(vertices) > 1 else 2 * tol
    lo, hi, _ = _cell_extent(config, x)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return np.inf
    return float(np.linalg.norm(hi - lo)) + 2 * tol


def certify_box(config, box, tol=EPS_GEOM):
    '''
    Whether the tessellation restricted to ``box`` is the same for every
    extension of the configuration outside its window.

    True when every cell meeting ``box`` is bounded and every circumball of
    its vertices lies inside the window.  The answer is cached on the
    configuration.
    '''
    return config.cached(('certified', box.key(), tol), lambda: _certify_box(config, box, tol))


def within_certified(config, box, tol=EPS_GEOM):
    '''
    Whether ``box`` lies in the analysis domain of the window and that domain
    is certified.  Cells that are not bounded with certified vertices then
    miss ``box``.
    '''
    analysis = config.window.analysis
    return analysis.contains_box(box) and certify_box(config, analysis, tol)


def _certify_box(config, box, tol):
    dual = voronoi_dual(config, tol)
    if dual is None:
        return False
    window = config.window
    with np.errstate(invalid='ignore'):
        ball_ok = (dual.certified
                   & np.all(dual.centers - dual.radii[:, None] >= window.lo, axis=1)
                   & np.all(dual.centers + dual.radii[:, None] <= window.hi, axis=1))
        meets = ~dual.hull_points & ~(np.any(dual.cell_hi < box.lo - tol, axis=1)
                                      | np.any(dual.cell_lo > box.hi + tol, axis=1))
    bad = np.bincount(dual.incidence_points, weights=(~ball_ok[dual.incidence_simplices]).astype(float),
                      minlength=config.n)
    if np.any(bad[meets] > 0):
        return False
    for x in np.flatnonzero(dual.hull_points):
        if cell_intersects_box(config, x, box, tol):
            logger.debug('unbounded cell %d meets %r', x, box)
            return False
    return True


class LatticeField(object):
    '''
    Integer values on the grid sites ``region ∩ hZ^d``, stored row-major.

    For a colouring the values are owner ids; :attr:`certified` records
    whether every site's nearest-point ball lies inside the window, so that
    the owners do not depend on points outside it.
    '''

    def __init__(self, region, h, start, values, certified=True):
        self.region = region
        self.h = float(h)
        self.start = np.asarray(start, dtype=int)
        self.values = values
        self.certified = bool(certified)

    @property
    def shape(self):
        return self.values.shape

    def coordinates(self, index):
        return (self.start + np.asarray(index)) * self.h

    def sites(self):
        """All site coordinates as an ``(m, d)`` array in storage order."""
        axes = [(s + np.arange(k)) * self.h for s, k in zip(self.start, self.shape)]
        grids = np.meshgrid(*axes, indexing='ij')
        return np.stack([g.ravel() for g in grids], axis=1)

    def dump(self, path):
        """Raw little-endian int64 values at ``path``, JSON header at ``path + '.json'``."""
        self.values.astype('<i8').tofile(path)
        header = {'region': self.region.to_dict(), 'h': self.h, 'start': self.start.tolist(),
                  'shape': list(self.shape), 'dtype': '<i8', 'order': 'row-major by axis',
                  'certified': self.certified}
        with open(path + '.json', 'w') as handle:
            json.dump(header, handle, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path + '.json') as handle:
            header = json.load(handle)
        values = np.fromfile(path, dtype=header['dtype']).reshape(header['shape'])
        return cls(Box.from_dict(header['region']), header['h'], header['start'], values,
                   header['certified'])


def grid_sites(region, h):
    """First site index and per-axis site counts of ``region ∩ hZ^d``."""
    if not h > 0:
        raise ValidationError('grid spacing must be positive, got {0}'.format(h))
    start = np.ceil(region.lo / h - 1e-9).astype(int)
    stop = np.floor(region.hi / h + 1e-9).astype(int)
    shape = np.maximum(stop - start + 1, 0)
    total = int(np.prod(shape.astype(float)))
    if total > GRID_SITE_CAP:
        raise BudgetExceeded('{0} grid sites exceed the cap of {1}'.format(total, GRID_SITE_CAP))
    return start, tuple(int(k) for k in shape)


def grid_coloring(config, region, h, tol=EPS_GEOM):
    '''
    Colour every site of ``region ∩ hZ^d`` by its owner, :func:`locate`'s
    answer at the site.  Sites are processed in slabs along the first axis.
    '''
    _check_nonempty(config)
    start, shape = grid_sites(region, h)
    values = np.empty(shape, dtype=np.int64)
    certified = True
    if 0 in shape:
        return LatticeField(region, h, start, values, certified)
    tail_axes = [(s + np.arange(k)) * h for s, k in zip(start[1:], shape[1:])]
    tail = np.stack([g.ravel() for g in np.meshgrid(*tail_axes, indexing='ij')], axis=1)
    chunk = max(1, 2 ** 20 // len(tail))
    window = config.window
    for i0 in range(0, shape[0], chunk):
        first = (start[0] + np.arange(i0, min(i0 + chunk, shape[0]))) * h
        sites = np.column_stack([np.repeat(first, len(tail)), np.tile(tail, (len(first), 1))])
        owners, _, reach = _owners(config, sites, tol)
        values[i0:i0 + len(first)] = owners.reshape((len(first),) + shape[1:])
        certified = certified and bool(np.all(sites - reach[:, None] >= window.lo)
                                       and np.all(sites + reach[:, None] <= window.hi))
    return LatticeField(region, h, start, values, certified)
