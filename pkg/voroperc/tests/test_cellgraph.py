import csv
import os
import shutil
import tempfile

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from voroperc import cellgraph
from voroperc.cellgraph import (LatticeField, _clip_face, _clip_polygon, adjacent_pair, build_cell_graph,
                                cell_diameter_bound, cell_escapes_box, cell_intersects_box, cells_meeting_box,
                                certify_box, face_of, grid_coloring, locate, locate_many, within_certified)
from voroperc.constants import EPS_GEOM
from voroperc.exceptions import ValidationError
from voroperc.oracles import delaunay_pairs, nearest_bruteforce
from voroperc.ppp import PointConfig, Window, sample_ppp
from voroperc.regions import Box

STRIP = Window([-1, -1], [3, 1])
SQUARE = Window([-1, -1], [2, 2])
CORNERS = [(0, 0), (1, 0), (0, 1), (1, 1)]

LOCATE_TESTS = [
    # points, query, expected id, degenerate
    ([(0, 0), (2, 0)], (0.5, 0), 0, False),
    ([(0, 0), (2, 0)], (1.9, 0.5), 1, False),
    ([(0, 0), (2, 0)], (1, 0), 0, True),
    ([(2, 0), (0, 0)], (1, 0.7), 0, True),
    ([(0, 0)], (2.5, -0.5), 0, False),
]


def edge_set(graph):
    return set(map(tuple, graph.edges.tolist())) - graph.degenerate


def random_configs(count, radius=2.5, dimension=2, minimum=3):
    configs = [sample_ppp(Window.centered(radius, dimension), seed=seed) for seed in range(count)]
    return [c for c in configs if c.n >= minimum]


def grid_config(side, dimension):
    axis = np.arange(side) - side / 2.0 + 0.5
    points = np.stack([g.ravel() for g in np.meshgrid(*([axis] * dimension), indexing='ij')], axis=1)
    return PointConfig.from_points(Window.centered(side / 2.0, dimension), points)


def check_locate(points, query, expected, degenerate):
    config = PointConfig.from_points(STRIP, points)
    location = locate(config, query)
    assert location.id == expected, (points, query, location)
    assert location.degenerate == degenerate, (points, query, location)


def test_locate():
    for case in LOCATE_TESTS:
        check_locate(*case)


def test_locate_matches_bruteforce():
    rng = np.random.default_rng(1)
    for config in random_configs(10):
        queries = config.window.lo + config.window.sides * rng.random((200, 2))
        expected = [nearest_bruteforce(config.positions, y) for y in queries]
        owners, _ = locate_many(config, queries)
        assert_array_equal(owners, expected)


def test_locate_empty_config():
    config = PointConfig.from_points(STRIP, np.zeros((0, 2)))
    try:
        locate(config, (0, 0))
    except ValidationError:
        pass
    else:
        raise AssertionError('located a point in an empty configuration')


def test_two_points_one_edge():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    for method in ('dual', 'radius'):
        graph = build_cell_graph(config, method=method)
        assert_array_equal(graph.edges, [[0, 1]])
        z = graph.witness(0, 1)
        assert abs(z[0] - 1.0) < 1e-7
        assert graph.has_edge(1, 0)
        assert not graph.degenerate


def test_single_point_has_no_edges():
    config = PointConfig.from_points(STRIP, [(0.5, 0.5)])
    graph = build_cell_graph(config)
    assert len(graph) == 0
    assert len(graph.neighbours(0)) == 0


def test_collinear_points():
    config = PointConfig.from_points(STRIP, [(0, 0), (1, 0), (2, 0)])
    assert adjacent_pair(config, 0, 2) is None
    assert not face_of(config, 0, 2).degenerate
    assert adjacent_pair(config, 0, 1) is not None
    for method in ('dual', 'radius'):
        graph = build_cell_graph(config, method=method)
        assert_array_equal(graph.edges, [[0, 1], [1, 2]])
        assert_array_equal(graph.neighbours(1), [0, 2])


def test_square_corners_diagonals_degenerate():
    config = PointConfig.from_points(SQUARE, CORNERS)
    for x, y in ((0, 3), (1, 2)):
        face = face_of(config, x, y)
        assert face.witness is None
        assert face.degenerate
    sides = {(0, 1), (0, 2), (1, 3), (2, 3)}
    graph = build_cell_graph(config, method='radius')
    assert set(map(tuple, graph.edges.tolist())) == sides
    assert graph.degenerate == frozenset([(0, 3), (1, 2)])
    dual = build_cell_graph(config, method='dual')
    assert set(map(tuple, dual.edges.tolist())) == sides
    assert dual.degenerate <= frozenset([(0, 3), (1, 2)])


def test_face_of_rejects_bad_pairs():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    for x, y in ((0, 0), (0, 2), (-1, 1)):
        try:
            face_of(config, x, y)
        except ValidationError:
            pass
        else:
            raise AssertionError('accepted pair {0}'.format((x, y)))


def test_matches_empty_circle_oracle():
    configs = random_configs(40)
    for method, subset in (('dual', configs), ('radius', configs[:10])):
        for config in subset:
            graph = build_cell_graph(config, method=method)
            assert edge_set(graph) == delaunay_pairs(config.positions) - graph.degenerate, (method, config)


def check_witnesses(graph):
    positions = graph.config.positions
    for (x, y), z in zip(graph.edges, graph.witnesses):
        dist = np.linalg.norm(positions - z, axis=1)
        assert abs(dist[x] - dist[y]) <= 1e-7 * (1 + dist[x])
        assert dist[x] <= dist.min() + 1e-7 * (1 + dist[x])


def test_witnesses_are_on_shared_faces():
    for config in random_configs(10) + random_configs(3, radius=1.5, dimension=3, minimum=4):
        check_witnesses(build_cell_graph(config))


def test_witness_neighbourhood_belongs_to_edge():
    step = 1e-4
    for config in random_configs(10):
        graph = build_cell_graph(config)
        for (x, y), z, slack in zip(graph.edges, graph.witnesses, graph.slack):
            px = config.positions[x]
            if slack < 1e-3 or np.linalg.norm(px - z) > 10:
                continue
            towards = z + step * (px - z) / np.linalg.norm(px - z)
            assert locate(config, towards).id == x


def test_methods_agree():
    configs = random_configs(6) + random_configs(3, radius=1.5, dimension=3, minimum=5)
    for config in configs:
        dual = build_cell_graph(config, method='dual')
        radius = build_cell_graph(config, method='radius')
        assert edge_set(dual) == edge_set(radius), config


def test_reflection_invariance():
    for config in random_configs(8):
        mirrored = PointConfig.from_points(config.window, config.positions * [-1, 1])
        swapped = PointConfig.from_points(config.window, config.positions[:, ::-1])
        expected = edge_set(build_cell_graph(config))
        assert edge_set(build_cell_graph(mirrored)) == expected
        assert edge_set(build_cell_graph(swapped)) == expected


def test_domain_restricts_witnesses():
    domain = Box([-1, -1], [1, 1])
    for config in random_configs(8):
        full = edge_set(build_cell_graph(config))
        graph = build_cell_graph(config, domain=domain)
        assert np.all(domain.contains(graph.witnesses, 1e-9))
        assert edge_set(graph) <= full


def test_sorted_edges_and_adjacency():
    graph = build_cell_graph(random_configs(1)[0])
    assert np.all(graph.edges[:, 0] < graph.edges[:, 1])
    keys = graph.edges[:, 0] * graph.config.n + graph.edges[:, 1]
    assert np.all(np.diff(keys) > 0)
    for x in range(graph.config.n):
        for y in graph.neighbours(x):
            assert graph.has_edge(x, y)
    assert graph.to_networkx().number_of_edges() == len(graph)


def test_unknown_method():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    try:
        build_cell_graph(config, method='voronoi')
    except ValidationError:
        pass
    else:
        raise AssertionError('accepted an unknown method')


def test_cell_meets_box():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    assert not cell_intersects_box(config, 0, Box([1.5, -0.5], [2.5, 0.5]))
    assert cell_intersects_box(config, 0, Box([0.5, -0.5], [1.5, 0.5]))
    assert cell_intersects_box(config, 1, Box([0.5, -0.5], [1.5, 0.5]))
    assert_array_equal(cells_meeting_box(config, Box([1.5, -0.5], [2.5, 0.5])), [1])


def test_cell_meets_box_sound_on_grid():
    region = Box([-1, -1], [1, 1])
    for config in random_configs(5):
        field = grid_coloring(config, region, 0.05)
        seen = np.unique(field.values)
        meeting = set(cells_meeting_box(config, region).tolist())
        assert set(seen.tolist()) <= meeting


def test_cell_escapes_box():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    assert cell_escapes_box(config, 0, Box([-0.5, -0.5], [0.5, 0.5]))
    grid = grid_config(6, 2)
    x = locate(grid, (0.5, 0.5)).id
    assert not cell_escapes_box(grid, x, Box([-0.5, -0.5], [1.5, 1.5]))
    assert cell_escapes_box(grid, x, Box([0.2, 0.2], [2.0, 2.0]))


def test_diameter_of_grid_cells():
    for dimension, side in ((2, 6), (3, 4)):
        config = grid_config(side, dimension)
        x = locate(config, np.full(dimension, 0.5)).id
        assert abs(cell_diameter_bound(config, x) - np.sqrt(dimension)) < 1e-6
        corner = locate(config, np.full(dimension, -side / 2.0 + 0.5)).id
        assert cell_diameter_bound(config, corner) == np.inf


def test_diameter_of_two_points():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    assert cell_diameter_bound(config, 0) == np.inf


def test_certify_box():
    dense = sample_ppp(Window.centered(3.0, 2, margin=6.0), seed=2)
    assert certify_box(dense, dense.window.analysis)
    sparse = PointConfig.from_points(Window.centered(1.0, 2, margin=1.0),
                                     [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)])
    assert not certify_box(sparse, sparse.window.analysis)


def test_grid_coloring_ties_go_to_smaller_id():
    config = PointConfig.from_points(STRIP, [(0, 0), (2, 0)])
    field = grid_coloring(config, Box([0, -0.5], [2, 0.5]), 0.25)
    assert field.shape == (9, 5)
    expected = (np.arange(9) * 0.25 > 1).astype(int)
    assert_array_equal(field.values, np.repeat(expected[:, None], 5, axis=1))


def test_grid_coloring_matches_bruteforce():
    for config in random_configs(3):
        field = grid_coloring(config, Box([-2, -2], [2, 2]), 0.1)
        sites = field.sites()
        assert len(sites) == 41 * 41
        dist = np.linalg.norm(sites[:, None, :] - config.positions[None, :, :], axis=2)
        assert_array_equal(field.values.ravel(), np.argmin(dist, axis=1))


def test_dump_graph_and_field():
    tmp = tempfile.mkdtemp()
    try:
        config = PointConfig.from_points(SQUARE, CORNERS)
        graph = build_cell_graph(config, method='radius')
        path = os.path.join(tmp, 'graph.csv')
        graph.dump(path)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ['x_id', 'y_id', 'z1', 'z2', 'degenerate']
        assert len(rows) == 1 + 4 + 2
        assert [row[-1] for row in rows[1:]] == ['0'] * 4 + ['1'] * 2
        assert rows[-1][:2] == ['1', '2'] and rows[-1][2:4] == ['', '']

        field = grid_coloring(config, Box([0, 0], [1, 1]), 0.25)
        path = os.path.join(tmp, 'field.bin')
        field.dump(path)
        loaded = LatticeField.load(path)
        assert_array_equal(loaded.values, field.values)
        assert_array_equal(loaded.start, field.start)
        assert loaded.h == field.h and loaded.certified == field.certified
    finally:
        shutil.rmtree(tmp)


CLIP_TESTS = [
    # face vertices, bisector normal, domain, meets, expected witness (None when on the boundary)
    ([(0, -1, -1), (0, 1, -1), (0, 1, 1), (0, -1, 1)], (1, 0, 0), Box([-1, 0.5, 0.5], [1, 2, 2]),
     True, (0, 0.75, 0.75)),
    ([(0, -1, -1), (0, 1, -1), (0, 1, 1), (0, -1, 1)], (1, 0, 0), Box([-1, 1.5, -1], [1, 2, 1]),
     False, None),
    ([(0, -1, -1), (0, 1, -1), (0, 1, 1), (0, -1, 1)], (1, 0, 0), Box([-1, -2, -2], [0, 2, 2]),
     True, None),
    ([(0, 0, 0), (2, 0, 0), (0, 2, 0)], (0, 0, 1), Box([-1, -1, -1], [0.5, 0.5, 1]),
     True, (0.25, 0.25, 0)),
]


def check_clip_face(vertices, normal, domain, meets, expected):
    found, z = _clip_face(np.array(vertices, dtype=float), np.array(normal, dtype=float), domain, 1e-12)
    assert found == meets, (vertices, domain)
    if expected is None:
        assert z is None, (vertices, domain, z)
    else:
        assert_allclose(z, expected, atol=1e-9)


def test_clip_face():
    for case in CLIP_TESTS:
        check_clip_face(*case)


def test_clip_segment_stays_on_face():
    vertices = np.array([(1.0, -1.0), (1.0, 1.0)])
    meets, z = _clip_face(vertices, np.array([1.0, 0.0]), Box([0, 0], [2, 2]), 1e-12)
    assert meets
    assert z[0] == 1.0 and 0 < z[1] < 1
    assert _clip_face(vertices, np.array([1.0, 0.0]), Box([1.5, 0], [2, 2]), 1e-12) == (False, None)


def test_clip_polygon_to_box():
    square = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
    cut = _clip_polygon(square, np.array([0.0, 0.0]), np.array([2.0, 2.0]))
    assert_allclose(sorted(map(tuple, cut)), [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert len(_clip_polygon(square, np.array([2.0, 2.0]), np.array([3.0, 3.0]))) == 0


def test_domain_methods_agree():
    cases = [(config, Box([-1, -1], [1, 1])) for config in random_configs(8)]
    cases += [(config, Box([-0.5] * 3, [0.5] * 3))
              for config in random_configs(3, radius=1.5, dimension=3, minimum=5)]
    for config, domain in cases:
        dual = build_cell_graph(config, domain=domain, method='dual')
        radius = build_cell_graph(config, domain=domain, method='radius')
        assert edge_set(dual) == edge_set(radius), config


def test_certified_domain_skips_linear_programs():
    dense = sample_ppp(Window.centered(3.0, 2, margin=6.0), seed=2)
    domain = dense.window.analysis
    assert within_certified(dense, domain)
    calls = []

    def counting_face_of(*args, **kwargs):
        calls.append(args[1:3])
        return face_of(*args, **kwargs)

    cellgraph.face_of = counting_face_of
    try:
        graph = build_cell_graph(dense, domain=domain)
    finally:
        cellgraph.face_of = face_of
    assert calls == []
    assert np.all(domain.contains(graph.witnesses, 1e-9))
    full = build_cell_graph(dense)
    inside = domain.contains_interior(full.witnesses, 1e-6)
    expected = set(map(tuple, full.edges[inside].tolist())) - full.degenerate
    assert expected <= edge_set(graph) <= edge_set(full)


def test_certify_box_is_cached():
    dense = sample_ppp(Window.centered(3.0, 2, margin=6.0), seed=2)
    box = dense.window.analysis
    assert certify_box(dense, box) is certify_box(dense, box)
    assert ('certified', box.key(), EPS_GEOM) in dense._cache
    assert not within_certified(dense, box.expand(1.0))
