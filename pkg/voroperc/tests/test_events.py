from itertools import product

import numpy as np
from numpy.testing import assert_array_equal

from voroperc.backends import lattice_backend
from voroperc.cellgraph import cell_diameter_bound, cell_escapes_box, cell_intersects_box
from voroperc.events import (EMPTY_CLUSTER, box_crossing, cell_count, cell_count_exceeds, chemical_distance_ok,
                             connects, dense_cluster, evaluate, event_names, get_event, good_uniqueness, lam,
                             large_cell, local_uniqueness, n_good, origin_cluster_stats, origin_diameter,
                             probe_sites, register_event, slab_crossing, star_connected_good_fraction,
                             uniqueness_count)
from voroperc.exceptions import ValidationError
from voroperc.models import continuum
from voroperc.oracles import (check_monotone_crossing, chemical_distance_bruteforce, open_cell_clusters,
                              star_components)
from voroperc.ppp import PointConfig, Window, sample_ppp

PROBE_TESTS = [
    # L, ell, dimension, count
    (2, 1, 2, 25),
    (2, 0.5, 2, 81),
    (1, 1, 3, 27),
    (1.5, 1, 2, 9),
]


def positive_marks(config):
    marks = np.maximum(config.marks, 1e-3)
    return PointConfig(config.window, config.positions, marks, config.intensity)


def grid_config(side, marks):
    axis = np.arange(side) - (side - 1) / 2.0
    points = np.stack([g.ravel() for g in np.meshgrid(axis, axis, indexing='ij')], axis=1)
    return PointConfig(Window.centered(side / 2.0, 2), points, marks)


def isolated_origin():
    """5 x 5 grid whose only open point sits at the origin."""
    marks = np.full(25, 0.9)
    marks[12] = 0.1
    return grid_config(5, marks)


def raises(func, *args, **kwargs):
    try:
        func(*args, **kwargs)
    except ValidationError:
        return True
    return False


def check_probe_sites(L, ell, dimension, count):
    sites = probe_sites(L, ell, dimension)
    assert sites.shape == (count, dimension), (L, ell, dimension)
    assert np.all(np.abs(sites) <= L)


def test_probe_sites():
    for case in PROBE_TESTS:
        check_probe_sites(*case)


def test_crossing_extremes():
    config = positive_marks(sample_ppp(Window.centered(4.0, 2, margin=2.0), seed=1))
    assert box_crossing(config, continuum(1.0), 3.0)
    assert not box_crossing(config, continuum(0.0), 3.0)
    assert box_crossing(config, continuum(1.0), 3.0, axis=1, backend=lattice_backend(0.25))
    assert slab_crossing(config, continuum(1.0), 3.0, 1.0)


def test_crossing_outside_analysis_domain():
    config = sample_ppp(Window.centered(2.0, 2, margin=2.0), seed=1)
    assert raises(box_crossing, config, continuum(0.5), 3.0)
    assert raises(dense_cluster, config, continuum(0.5), 1.5, 0.5)


def test_crossing_is_monotone():
    configs = [sample_ppp(Window.centered(4.0, 2, margin=2.0), seed=seed) for seed in range(4)]
    name, cases = check_monotone_crossing(configs, 3.0, [0.1 * i for i in range(1, 10)])
    assert cases == 4


def test_isolated_open_cell():
    config = isolated_origin()
    assert not box_crossing(config, continuum(0.5), 2.0)
    assert not connects(config, continuum(0.5), 0.25, 2.0)
    assert connects(config, continuum(1.0), 0.25, 2.0)
    assert uniqueness_count(config, continuum(0.5), 1.0) == 0
    assert raises(connects, config, continuum(0.5), 2.0, 1.0)


def test_origin_cluster_of_isolated_cell():
    stats = origin_cluster_stats(isolated_origin(), continuum(0.5), sample_budget=500, seed=3)
    assert not stats.censored
    assert stats.size == 1
    assert abs(stats.diam_proxy - 2 * np.sqrt(2)) < 1e-6
    assert abs(stats.vol_estimate - 1.0) < 1e-6
    assert stats.vol_stderr < 1e-6
    assert origin_diameter(isolated_origin(), continuum(0.5), 2.0)
    assert not origin_diameter(isolated_origin(), continuum(0.5), 3.0)


def test_origin_cluster_closed_or_censored():
    config = isolated_origin()
    assert origin_cluster_stats(config, continuum(0.05)) == EMPTY_CLUSTER
    stats = origin_cluster_stats(config, continuum(1.0), sample_budget=0)
    assert stats.censored and stats.size == 25
    assert not origin_diameter(config, continuum(1.0), 1.0)


def test_uniqueness_extremes():
    config = positive_marks(sample_ppp(Window.centered(4.0, 2, margin=2.0), seed=2))
    assert uniqueness_count(config, continuum(1.0), 2.0) == 1
    assert local_uniqueness(config, continuum(1.0), 2.0)
    assert not local_uniqueness(config, continuum(0.0), 2.0)
    assert local_uniqueness(config, continuum(0.0), 2.0, strict=True)


def test_dense_cluster_extremes():
    config = positive_marks(sample_ppp(Window.centered(4.0, 2, margin=2.0), seed=2))
    assert dense_cluster(config, continuum(1.0), 2.0, 1.0)
    assert not dense_cluster(config, continuum(0.0), 2.0, 1.0)
    assert raises(dense_cluster, config, continuum(1.0), 1.0, 2.0)


def test_n_good_extremes():
    config = positive_marks(sample_ppp(Window.centered(4.0, 2, margin=2.0), seed=4))
    assert n_good(config, continuum(1.0), (0, 0), 1.0)
    assert not n_good(config, continuum(0.0), (0, 0), 1.0)


def test_chemical_distance_matches_bruteforce():
    for seed in range(4):
        config = sample_ppp(Window.centered(2.0, 2, margin=2.0), seed=seed)
        for M in (1, 2, 3, 5):
            assert chemical_distance_ok(config, 1.0, M) == chemical_distance_bruteforce(config, 1.0, M)


def test_chemical_distance_limits():
    config = sample_ppp(Window.centered(2.0, 2, margin=2.0), seed=7)
    assert chemical_distance_ok(config, 1.0, 10 ** 6)
    assert not chemical_distance_ok(config, 1.0, 0)
    assert chemical_distance_ok(config, 1.0, 3) or not chemical_distance_ok(config, 1.0, 3, conservative=True)


def test_star_connected_surrogate():
    config = sample_ppp(Window.centered(7.0, 2), seed=5)
    outcome, good = star_connected_good_fraction(config, 1.0, 1.0, 10 ** 6)
    assert outcome
    assert good.shape == (3, 3) and good.all()
    outcome, good = star_connected_good_fraction(config, 1.0, 1.0, 0)
    assert not outcome
    assert not good.any()


def test_cell_statistics_on_grid():
    config = grid_config(5, np.full(25, 0.5))
    assert cell_count(config, 1.0) == 9
    assert cell_count_exceeds(config, 1.0, 2.0)
    assert not cell_count_exceeds(config, 1.0, 10.0)
    assert large_cell(config, 1.0, 1.0)
    assert not large_cell(config, 1.0, 2.0)


def test_registry():
    for name in ('crossing', 'connects', 'uniqueness', 'dense_cluster', 'chemdist', 'star_good',
                 'origin_diameter', 'origin_volume', 'n_good', 'large_cell', 'open_at'):
        assert name in event_names()
    assert get_event('crossing').increasing
    assert get_event('chemdist').tessellation
    assert not get_event('uniqueness').increasing
    assert get_event('crossing').extent(2, L=3.0) == 3.0
    assert get_event('dense_cluster').extent(2, L=3.0, ell=1.0) == 6.0
    assert raises(get_event, 'percolates')


def test_evaluate():
    config = isolated_origin()
    outcome = evaluate('uniqueness', config, continuum(1.0), L=1.0)
    assert outcome.value and outcome.aux == 1
    outcome = evaluate('crossing', config, continuum(0.5), L=2.0)
    assert not outcome.value and outcome.aux is None
    assert evaluate('open_at', config, continuum(0.5), x=(0.2, 0.1)).value
    assert not evaluate('open_at', config, continuum(0.5), x=(1.8, 0.1)).value


def test_register_event():
    register_event('mark_below', lambda config, model, backend, seed, q: bool(np.all(config.marks < q)),
                   lambda d, q: 1.0, increasing=True)
    config = isolated_origin()
    assert evaluate('mark_below', config, continuum(0.5), q=0.95).value
    assert not evaluate('mark_below', config, continuum(0.5), q=0.5).value
    assert get_event('mark_below').extent(2, q=0.5) == 1.0


def test_lam():
    box = lam(2.0, 3, center=(1, 0, 0))
    assert_array_equal(box.lo, [-1, -2, -2])
    assert_array_equal(box.hi, [3, 2, 2])


LEVELS = (0.4, 0.5, 0.6)

COLLINEAR_TESTS = [
    # points beyond the first, M, every pair within M hops
    (4, 3, False),
    (4, 4, True),
    (2, 1, False),
    (2, 2, True),
]


def mixed_configs():
    return [sample_ppp(Window.centered(4.0, 2, margin=2.0), seed=seed) for seed in range(3)]


def meets(config, cluster, box):
    return any(cell_intersects_box(config, x, box) for x in cluster)


def escapes(config, cluster, box, domain):
    return any(cell_escapes_box(config, x, box, domain) for x in cluster)


def annulus_crossers(config, p, L):
    domain = lam(2 * L, 2)
    return [c for c in open_cell_clusters(config, p, domain)
            if meets(config, c, lam(L / 2.0, 2)) and escapes(config, c, lam(L, 2), domain)]


def cluster_diameter(config, cluster, cap):
    positions = config.positions[sorted(cluster)]
    extent = np.max(positions.max(axis=0) - positions.min(axis=0))
    return extent + 2 * max(min(cell_diameter_bound(config, x), cap) for x in cluster)


def test_uniqueness_at_intermediate_levels():
    for config in mixed_configs():
        for p in LEVELS:
            expected = len(annulus_crossers(config, p, 2.0))
            assert uniqueness_count(config, continuum(p), 2.0) == expected, (config, p)
            assert local_uniqueness(config, continuum(p), 2.0) == (expected == 1), (config, p)
            assert local_uniqueness(config, continuum(p), 2.0, strict=True) == (expected <= 1), (config, p)


def test_good_uniqueness():
    L = 2.0
    domain = lam(2 * L, 2)
    for config in mixed_configs():
        for p in LEVELS:
            crossers = annulus_crossers(config, p, L)
            expected = (len(crossers) == 1 and meets(config, crossers[0], lam(L / 4.0, 2))
                        and escapes(config, crossers[0], domain, domain))
            assert good_uniqueness(config, continuum(p), L) == expected, (config, p)
    config = positive_marks(mixed_configs()[0])
    assert good_uniqueness(config, continuum(1.0), L)
    assert not good_uniqueness(config, continuum(0.0), L)
    assert evaluate('good_uniqueness', config, continuum(1.0), L=L).value


def test_dense_cluster_at_intermediate_levels():
    L, ell = 2.0, 1.0
    for config in mixed_configs():
        candidates = set().union(*open_cell_clusters(config, 1.0, lam(2 * L, 2)))
        near = [{x for x in candidates if cell_intersects_box(config, x, lam(ell, 2, site))}
                for site in probe_sites(L, ell, 2)]
        for p in (0.5, 0.7, 0.9):
            clusters = open_cell_clusters(config, p, lam(2 * L, 2))
            expected = any(all(c & cells for cells in near) for c in clusters)
            assert dense_cluster(config, continuum(p), L, ell) == expected, (config, p)


def test_n_good_at_intermediate_levels():
    N = 1.0
    domain = lam(4 * N, 2)
    cap = np.linalg.norm(domain.sides)
    for config in mixed_configs():
        for p in LEVELS + (0.8,):
            clusters = open_cell_clusters(config, p, domain)
            big = [c for c in clusters if cluster_diameter(config, c, cap) > N / 4.0]
            expected = len(big) == 1 and all(meets(config, big[0], lam(N, 2, 2 * N * np.array(y)))
                                             for y in product((-1, 0, 1), repeat=2))
            assert n_good(config, continuum(p), (0, 0), N) == expected, (config, p)


def check_collinear_chemical_distance(k, M, expected):
    # cells are parallel strips, so the end cells are k hops apart
    points = [(i - k / 2.0, 0.0) for i in range(k + 1)]
    config = PointConfig(Window.centered(k + 1.0, 2), points, np.full(k + 1, 0.5))
    R = k / 2.0 + 0.1
    assert chemical_distance_ok(config, R, M) == expected, (k, M)
    assert chemical_distance_bruteforce(config, R, M) == expected, (k, M)


def test_collinear_chemical_distance():
    for case in COLLINEAR_TESTS:
        check_collinear_chemical_distance(*case)


def test_star_surrogate_matches_star_components():
    config = sample_ppp(Window.centered(8.0, 2), seed=5)
    for kappa in (4, 6, 8):
        outcome, good = star_connected_good_fraction(config, 2.0, 1.0, kappa, threshold=2)
        assert good.shape == (5, 5)
        largest = max([len(c) for c in star_components(~good)] + [0])
        assert outcome == (largest < 2), kappa
