import numpy as np
from numpy.testing import assert_array_equal

from voroperc.exceptions import ValidationError
from voroperc.models import (BoxField, alignment, bernoulli_box_field, check_aligned, common_side, compose,
                             continuum, membership, membership_many, model_from_descriptor, required_margin,
                             truncated, truncated_obstacles)
from voroperc.oracles import inclusion_violations
from voroperc.ppp import PointConfig, Window, sample_ppp
from voroperc.regions import Box

ROW = PointConfig(Window([0, 0], [3, 1]), [[0.5, 0.5], [2.5, 0.5]], [0.2, 0.9])

CONTINUUM_TESTS = [
    # point, p, open
    ((1.0, 0.5), 0.5, True),
    ((2.0, 0.5), 0.5, False),
    ((1.5, 0.5), 0.5, True),
    ((1.5, 0.9), 0.5, True),
    ((2.9, 0.1), 0.5, False),
    ((2.9, 0.1), 0.9, True),
    ((0.1, 0.1), 0.1, False),
]

COMMON_SIDE_TESTS = [
    ([], 0.0),
    ([4.0], 4.0),
    ([2, 3], 6.0),
    ([4, 6, 4], 12.0),
    ([1.5, 2.0], 2.0),
]


def check_continuum(point, p, expected):
    assert membership(point, continuum(p), ROW) == expected, (point, p)


def test_continuum_membership():
    for case in CONTINUUM_TESTS:
        check_continuum(*case)


def test_extreme_levels():
    config = sample_ppp(Window.centered(3.0, 2), seed=4)
    points = np.random.default_rng(0).uniform(-3, 3, (500, 2))
    assert membership_many(points, continuum(1.0), config).all()
    if np.all(config.marks > 0):
        assert not membership_many(points, continuum(0.0), config).any()


def test_empty_config_is_closed():
    config = PointConfig.from_points(Window.centered(2.0, 2), np.zeros((0, 2)))
    assert not membership((0, 0), continuum(1.0), config)


def test_open_region_grows_with_p():
    config = sample_ppp(Window.centered(4.0, 2), seed=9)
    points = np.random.default_rng(1).uniform(-4, 4, (2000, 2))
    levels = np.linspace(0, 1, 11)
    opened = [membership_many(points, continuum(p), config) for p in levels]
    for lower, upper in zip(opened, opened[1:]):
        assert not np.any(lower & ~upper)


def test_query_outside_analysis_domain():
    config = sample_ppp(Window.centered(2.0, 2, margin=1.0), seed=1)
    try:
        membership((2.5, 0), continuum(0.5), config)
    except ValidationError:
        pass
    else:
        raise AssertionError('queried the margin shell')
    assert len(membership_many([[2.5, 0]], continuum(0.5), config, check=False)) == 1


def test_truncated_range():
    config = PointConfig(Window([0, 0], [8, 8]), [[1, 1]], [0.1])
    model = truncated(2, 0.5)
    assert membership((1, 2.5), model, config)
    assert membership((1, 3), model, config)
    assert not membership((1, 3.5), model, config)


def test_saturated_box_is_solid():
    window = Window([0, 0], [4, 4])
    closed = [[2.2, 2.2], [2.5, 2.5], [2.8, 2.8]]
    config = PointConfig(window, closed + [[0.5, 2.5]], [0.9, 0.9, 0.9, 0.1])
    obstacles = truncated_obstacles(config, 0.5, 1)
    assert [b.key() for b in obstacles.saturated_boxes] == [Box([2, 2], [3, 3]).key()]
    assert obstacles.closed_points == frozenset()
    model = truncated(1, 0.5)
    assert not membership((1.4, 2.5), model, config)
    assert membership((0.6, 2.5), model, config)

    sparse = PointConfig(window, closed[:2] + [[0.5, 2.5]], [0.9, 0.9, 0.1])
    obstacles = truncated_obstacles(sparse, 0.5, 1)
    assert not obstacles.saturated.any()
    assert obstacles.closed_points == frozenset([0, 1])
    assert membership((1.2, 2.5), model, sparse)


def test_truncated_open_set_is_inside_continuum():
    rng = np.random.default_rng(3)
    for seed in range(3):
        config = sample_ppp(Window.centered(8.0, 2, margin=8.0), seed=seed)
        points = rng.uniform(-8, 8, (1000, 2))
        for p in (0.3, 0.5, 0.7):
            assert inclusion_violations(config, 4, p, points) == 0


def test_unaligned_window():
    try:
        check_aligned(Window([0, 0], [3, 3]), 2)
    except ValidationError:
        pass
    else:
        raise AssertionError('accepted an unaligned window')
    config = PointConfig(Window([0, 0], [3, 3]), [[1, 1]], [0.1])
    try:
        membership((1, 1), truncated(2, 0.5), config)
    except ValidationError:
        pass
    else:
        raise AssertionError('truncated model on an unaligned window')


def test_box_field_contains_closed_boxes():
    window = Window([0, 0], [2, 2])
    field = BoxField(1.0, 0.5, window, 0, [0, 0], np.array([[True, False], [False, False]]))
    inside = field.contains([[0.5, 0.5], [1.0, 1.0], [1.0, 0.2], [1.5, 0.5], [1.5, 1.5]])
    assert_array_equal(inside, [True, True, True, False, False])
    assert_array_equal(field.sites(), [[0, 0]])


def test_box_field_sampling():
    window = Window.centered(4.0, 2)
    a = bernoulli_box_field(2, 0.3, window, seed=5)
    assert_array_equal(a.occupied, bernoulli_box_field(2, 0.3, window, seed=5).occupied)
    assert a == bernoulli_box_field(2, 0.3, window, seed=5)
    assert not bernoulli_box_field(2, 0.0, window, seed=5).occupied.any()
    assert bernoulli_box_field(2, 1.0, window, seed=5).occupied.all()


def test_field_composition():
    config = sample_ppp(Window.centered(4.0, 2), seed=2)
    points = np.random.default_rng(2).uniform(-4, 4, (300, 2))
    full = bernoulli_box_field(1, 1.0, config.window, seed=0)
    empty = bernoulli_box_field(1, 0.0, config.window, seed=0)
    base = continuum(0.5)
    assert membership_many(points, compose(base, full, 'union'), config).all()
    assert not membership_many(points, compose(base, full, 'difference'), config).any()
    assert_array_equal(membership_many(points, compose(base, empty, 'union'), config),
                       membership_many(points, base, config))


def test_descriptor_round_trip():
    window = Window.centered(4.0, 2)
    model = compose(truncated(2, 0.4), bernoulli_box_field(2, 0.1, window, seed=3), 'difference')
    data = model.describe()
    assert data['kind'] == 'truncated' and data['N'] == 2.0
    assert data['fields'][0]['mode'] == 'difference'
    assert model_from_descriptor(data) == model
    assert model.with_level(0.6).p == 0.6
    assert model.with_level(0.6).field_ops == model.field_ops


def test_margin_and_alignment():
    assert required_margin(continuum(0.5)) == 0.0
    assert required_margin(truncated(3, 0.5)) == 6.0
    assert alignment(continuum(0.5)) == 0.0
    assert alignment(truncated(4, 0.5)) == 4.0
    field = bernoulli_box_field(6, 0.1, Window.centered(12.0, 2), seed=0)
    assert alignment(compose(truncated(4, 0.5), field, 'union')) == 12.0


def check_common_side(sides, expected):
    assert common_side(sides) == expected, sides


def test_common_side():
    for case in COMMON_SIDE_TESTS:
        check_common_side(*case)


def test_invalid_models():
    for build in (lambda: continuum(1.5), lambda: continuum(-0.1), lambda: truncated(0, 0.5),
                  lambda: truncated(float('inf'), 0.5),
                  lambda: compose(continuum(0.5), None, 'xor')):
        try:
            build()
        except ValidationError:
            pass
        else:
            raise AssertionError('built an invalid model')


TRANSLATION_TESTS = [
    # N, shift in units of N
    (1, (1, 0)),
    (2, (0, 1)),
    (2, (-1, 2)),
]


def test_truncated_finite_range():
    # queries in [6, 10]^2; with N = 1 nothing beyond l-infinity distance 2 may matter
    window = Window([0, 0], [16, 16])
    base = sample_ppp(window, seed=11)
    other = sample_ppp(window, intensity=3.0, seed=12)
    near = np.all((base.positions > 3) & (base.positions < 13), axis=1)
    far = ~np.all((other.positions > 3) & (other.positions < 13), axis=1)
    clump = 0.1 + np.random.default_rng(4).uniform(0, 0.8, (6, 2))
    changed = PointConfig(window, np.vstack([base.positions[near], other.positions[far], clump]),
                          np.concatenate([base.marks[near], other.marks[far], np.ones(6)]))
    points = np.random.default_rng(5).uniform(6, 10, (2000, 2))
    for p in (0.3, 0.5, 0.7):
        model = truncated(1, p)
        expected = membership_many(points, model, base)
        assert 0 < expected.sum() < len(points), p
        assert_array_equal(membership_many(points, model, changed), expected)
    assert truncated_obstacles(changed, 0.5, 1).saturated[0, 0]


def check_translation(N, shift):
    config = sample_ppp(Window([0, 0], [12, 12]), seed=7)
    offset = N * np.array(shift, dtype=float)
    moved = PointConfig(Window(config.window.lo + offset, config.window.hi + offset),
                        config.positions + offset, config.marks)
    points = np.random.default_rng(8).uniform(0, 12, (1000, 2))
    for p in (0.4, 0.6):
        model = truncated(N, p)
        assert_array_equal(membership_many(points + offset, model, moved),
                           membership_many(points, model, config)), (N, shift, p)


def test_truncated_translation():
    for case in TRANSLATION_TESTS:
        check_translation(*case)
