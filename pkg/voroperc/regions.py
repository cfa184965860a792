"""
Axis-aligned regions in l-infinity geometry.

Every region exposes a vectorised :meth:`contains` over an ``(m, d)`` array of
points; the cell-graph backend additionally dispatches on :attr:`kind`.

>>> box = Box.centered(2, dimension=2)
>>> box
<Box [-2, 2]^2>
>>> bool(box.contains([0.5, -2.0]))
True
>>> bool(BoxExterior(box).contains([0.5, -2.0]))
True
"""

import numpy as np

from voroperc.exceptions import ValidationError


def _format_number(value):
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


class Box(object):
    '''
    Closed box ``[lo, hi]``.  A side of zero length is allowed (faces used as
    crossing sources are such boxes).
    '''

    kind = 'box'

    def __init__(self, lo, hi):
        lo = np.array(lo, dtype=float).reshape(-1)
        hi = np.array(hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValidationError('box corners have different dimensions: {0} and {1}'.format(
                lo.shape[0], hi.shape[0]))
        if np.any(hi < lo) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError('invalid box [{0}, {1}]'.format(lo.tolist(), hi.tolist()))
        lo.flags.writeable = False
        hi.flags.writeable = False
        self.lo = lo
        self.hi = hi

    @classmethod
    def centered(cls, radius, dimension, center=None):
        """The box ``center + [-radius, radius]^d``."""
        if radius < 0:
            raise ValidationError('negative box radius {0}'.format(radius))
        center = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
        return cls(center - radius, center + radius)

    @property
    def dimension(self):
        return self.lo.shape[0]

    @property
    def sides(self):
        return self.hi - self.lo

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def volume(self):
        return float(np.prod(self.sides))

    def contains(self, points, tol=0.0):
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lo - tol) & (points <= self.hi + tol), axis=-1)

    def contains_interior(self, points, tol=0.0):
        points = np.asarray(points, dtype=float)
        return np.all((points > self.lo + tol) & (points < self.hi - tol), axis=-1)

    def contains_box(self, other, tol=0.0):
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def intersects(self, other, tol=0.0):
        return bool(np.all(self.lo <= other.hi + tol) and np.all(other.lo <= self.hi + tol))

    def intersection(self, other):
        """The common box, or None when the two boxes are disjoint."""
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi < lo):
            return None
        return Box(lo, hi)

    def expand(self, amount):
        return Box(self.lo - amount, self.hi + amount)

    def translate(self, offset):
        return Box(self.lo + offset, self.hi + offset)

    def corners(self):
        d = self.dimension
        bits = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1
        return np.where(bits == 1, self.hi, self.lo)

    def key(self):
        return ('box', tuple(self.lo.tolist()), tuple(self.hi.tolist()))

    def to_dict(self):
        return {'lo': self.lo.tolist(), 'hi': self.hi.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data['lo'], data['hi'])

    def __eq__(self, other):
        return isinstance(other, Box) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        lo, hi = self.lo, self.hi
        if np.all(lo == lo[0]) and np.all(hi == hi[0]):
            return '<Box [{0}, {1}]^{2}>'.format(_format_number(lo[0]), _format_number(hi[0]),
                                                 self.dimension)
        return '<Box {0} x {1}>'.format(lo.tolist(), hi.tolist())


class BoxAnnulus(object):
    '''
    ``outer`` minus the interior of ``inner``.
    '''

    kind = 'annulus'

    def __init__(self, outer, inner):
        if not outer.contains_box(inner):
            raise ValidationError('annulus inner box {0!r} is not inside {1!r}'.format(inner, outer))
        self.outer = outer
        self.inner = inner

    @property
    def dimension(self):
        return self.outer.dimension

    def contains(self, points, tol=0.0):
        return self.outer.contains(points, tol) & ~self.inner.contains_interior(points, tol)

    def key(self):
        return ('annulus', self.outer.key(), self.inner.key())

    def __repr__(self):
        return '<BoxAnnulus {0!r} \\ {1!r}>'.format(self.outer, self.inner)


class BoxExterior(object):
    '''
    Complement of the interior of ``box``; "outside or on the boundary".
    '''

    kind = 'exterior'

    def __init__(self, box):
        self.box = box

    @property
    def dimension(self):
        return self.box.dimension

    def contains(self, points, tol=0.0):
        return ~self.box.contains_interior(points, tol)

    def key(self):
        return ('exterior', self.box.key())

    def __repr__(self):
        return '<BoxExterior {0!r}>'.format(self.box)


def slab(L, M, dimension):
    '''
    The slab ``[-L, L]^2 x [0, M]^(d-2)``; in two dimensions just ``[-L, L]^2``.

    >>> slab(3, 1, 3)
    <Box [-3.0, -3.0, 0.0] x [3.0, 3.0, 1.0]>
    '''
    if M <= 0:
        raise ValidationError('slab thickness must be positive, got {0}'.format(M))
    lo = [-float(L), -float(L)] + [0.0] * (dimension - 2)
    hi = [float(L), float(L)] + [float(M)] * (dimension - 2)
    return Box(lo, hi)


def face(box, axis, side):
    """The face of ``box`` orthogonal to ``axis``; ``side`` is -1 (low) or +1 (high)."""
    lo = np.array(box.lo)
    hi = np.array(box.hi)
    if side < 0:
        hi[axis] = lo[axis]
    else:
        lo[axis] = hi[axis]
    return Box(lo, hi)
