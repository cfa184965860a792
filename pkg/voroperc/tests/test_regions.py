import numpy as np

from voroperc.exceptions import ValidationError
from voroperc.regions import Box, BoxAnnulus, BoxExterior, face, slab

CONTAINS_TESTS = [
    ([0.0, 0.0], True, False),
    ([2.0, 0.0], True, True),
    ([2.5, 0.0], False, True),
    ([-2.0, -2.0], True, True),
    ([1.999, 1.999], True, False),
]


def check_contains(point, in_box, in_exterior):
    box = Box.centered(2, 2)
    assert bool(box.contains(point)) == in_box
    assert bool(BoxExterior(box).contains(point)) == in_exterior


def test_contains():
    for point, in_box, in_exterior in CONTAINS_TESTS:
        check_contains(point, in_box, in_exterior)


def test_contains_vectorised():
    box = Box([0, 0, 0], [1, 2, 3])
    points = np.array([[0.5, 1, 1], [1.5, 1, 1], [1, 2, 3]])
    assert box.contains(points).tolist() == [True, False, True]
    assert box.contains_interior(points).tolist() == [True, False, False]


def test_annulus():
    annulus = BoxAnnulus(Box.centered(4, 2), Box.centered(2, 2))
    assert annulus.contains([[3, 0], [2, 0], [1, 0], [5, 0]]).tolist() == [True, True, False, False]


def test_annulus_rejects_inner_outside():
    try:
        BoxAnnulus(Box.centered(1, 2), Box.centered(2, 2))
    except ValidationError:
        pass
    else:
        raise AssertionError('inner box larger than outer accepted')


def test_invalid_box():
    for lo, hi in [([1, 0], [0, 1]), ([0, 0], [1, np.inf]), ([0, 0], [1, 1, 1])]:
        try:
            Box(lo, hi)
        except ValidationError:
            continue
        raise AssertionError('accepted box {0} {1}'.format(lo, hi))


def test_intersection():
    a = Box([0, 0], [2, 2])
    assert a.intersection(Box([1, 1], [3, 3])) == Box([1, 1], [2, 2])
    assert a.intersection(Box([2, 0], [3, 1])) == Box([2, 0], [2, 1])
    assert a.intersection(Box([2.5, 0], [3, 1])) is None
    assert a.intersects(Box([2.5, 0], [3, 1]), tol=0.5)


def test_face_and_slab():
    box = Box.centered(3, 2)
    assert face(box, 0, -1) == Box([-3, -3], [-3, 3])
    assert face(box, 1, +1) == Box([-3, 3], [3, 3])
    assert slab(3, 1, 2) == box
    assert slab(2, 5, 4) == Box([-2, -2, 0, 0], [2, 2, 5, 5])


def test_corners():
    corners = Box([0, 0], [1, 2]).corners()
    assert sorted(map(tuple, corners.tolist())) == [(0, 0), (0, 2), (1, 0), (1, 2)]


def test_serialisation_and_keys():
    box = Box([-1.5, 0], [2, 4])
    assert Box.from_dict(box.to_dict()) == box
    assert len({box, Box([-1.5, 0], [2, 4])}) == 1
    assert box.key() != BoxExterior(box).key()
    assert repr(box) == '<Box [-1.5, 0.0] x [2.0, 4.0]>'
