import numpy as np


class UnionFind(object):
    '''
    Disjoint sets over ``0 .. n-1`` with path compression and union by rank.

    >>> uf = UnionFind(5)
    >>> uf.union(0, 1)
    >>> uf.union(3, 4)
    >>> uf.find(1) == uf.find(0)
    True
    >>> uf.labels().tolist()
    [0, 0, 1, 2, 2]
    '''

    def __init__(self, n):
        self.parent = np.arange(n)
        self.rank = np.zeros(n, dtype=int)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        # path compression
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return int(root)

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1

    def labels(self):
        """Consecutive component labels, numbered by first appearance."""
        roots = np.array([self.find(i) for i in range(len(self.parent))], dtype=int)
        _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
        rename = np.empty(len(first), dtype=int)
        rename[np.argsort(first)] = np.arange(len(first))
        return rename[inverse.reshape(-1)]


def component_labels(n, edges):
    """Component label of each of ``n`` units joined by the ``(k, 2)`` array ``edges``."""
    uf = UnionFind(n)
    for x, y in edges:
        uf.union(x, y)
    return uf.labels()


class ClusterLabeling(object):
    '''
    Open clusters of a colouring inside an analysis domain, as produced by a
    clustering backend.

    Units are the objects being clustered: point ids for the cell-graph
    backend, flat grid-site indices for the lattice backend.  Whether a unit
    touches a region is backend geometry, supplied as the ``touch`` callable
    ``touch(region) -> bool array over units``.
    '''

    units = None
    """Sorted array of open unit ids."""
    labels = None
    """Cluster label of each unit, ``0 .. count-1``."""

    positions = None
    """Coordinates of the units: cell sites or grid sites."""
    spacing = None
    """Grid spacing for lattice units, None for cells."""

    def __init__(self, units, labels, touch, domain, positions=None, locate=None, spacing=None):
        self.units = np.asarray(units, dtype=int)
        self.labels = np.asarray(labels, dtype=int)
        self.domain = domain
        self.count = int(self.labels.max()) + 1 if len(self.labels) else 0
        self.positions = positions
        self.spacing = spacing
        self._touch = touch
        self._locate = locate
        self._touches = {}

    @property
    def kind(self):
        return 'cells' if self.spacing is None else 'lattice'

    def unit_at(self, y):
        """The unit containing the point ``y`` (open or not), or None."""
        return None if self._locate is None else self._locate(y)

    def cluster_at(self, y):
        """Label of the open cluster containing ``y``, or None."""
        unit = self.unit_at(y)
        return None if unit is None else self.label_of(unit)

    def touches(self, region):
        """Boolean array: unit ``i`` touches ``region``."""
        key = region.key()
        if key not in self._touches:
            self._touches[key] = np.asarray(self._touch(region), dtype=bool)
        return self._touches[key]

    def touching(self, region):
        """Labels of the clusters touching ``region``."""
        return frozenset(np.unique(self.labels[self.touches(region)]).tolist())

    def crossing_clusters(self, source, target):
        return self.touching(source) & self.touching(target)

    def crossing(self, source, target):
        """Whether some open cluster touches both regions."""
        return bool(self.crossing_clusters(source, target))

    def sizes(self):
        return np.bincount(self.labels, minlength=self.count)

    def members(self, label):
        return self.units[self.labels == label]

    def label_of(self, unit):
        i = np.searchsorted(self.units, unit)
        if i < len(self.units) and self.units[i] == unit:
            return int(self.labels[i])
        return None

    def __repr__(self):
        return '<ClusterLabeling {0} units in {1} clusters>'.format(len(self.units), self.count)
