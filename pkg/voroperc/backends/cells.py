import logging

import numpy as np

from voroperc.backends.tools import ClusterLabeling, component_labels
from voroperc.cellgraph import (build_cell_graph, cells_escape_box, cells_meet_box, cells_meeting_box,
                                locate)
from voroperc.constants import EPS_GEOM
from voroperc.exceptions import ValidationError
from voroperc.ppp import open_mask

logger = logging.getLogger(__name__)


def cell_touch(config, ids, region, domain, tol=EPS_GEOM):
    '''
    Whether each cell in ``ids``, cut to ``domain``, meets ``region``.

    Annuli are decided as "meets the outer box and is not inside the interior
    of the inner box", which is exact for convex pieces.
    '''
    ids = np.asarray(ids, dtype=int)
    if region.kind == 'box':
        clipped = region.intersection(domain)
        if clipped is None:
            return np.zeros(len(ids), dtype=bool)
        return cells_meet_box(config, ids, clipped, tol)
    if region.kind == 'annulus':
        result = cell_touch(config, ids, region.outer, domain, tol)
        hit = np.flatnonzero(result)
        result[hit] = cells_escape_box(config, ids[hit], region.inner, domain, tol)
        return result
    if region.kind == 'exterior':
        return cells_escape_box(config, ids, region.box, domain, tol)
    raise ValidationError('unknown region kind {0!r}'.format(region.kind))


def cellgraph_backend(method='dual', tol=EPS_GEOM):
    '''
    Returns a function clustering the open cells of a continuum model with
    the exact cell graph.

    :param method: cell graph construction, ``'dual'`` or ``'radius'``

    The returned function takes ``(config, model, domain)`` and returns a
    :class:`~voroperc.backends.tools.ClusterLabeling` whose units are point
    ids.  Truncated models and box fields are rejected: their open pieces are
    not unions of cells.
    '''

    def func(config, model, domain):
        if model.kind != 'continuum' or model.field_ops:
            raise ValidationError('the cell graph backend only clusters continuum models without '
                                  'box fields; use the lattice backend for {0!r}'.format(model))
        if config.n == 0:
            return ClusterLabeling([], [], lambda region: np.zeros(0, dtype=bool), domain,
                                   np.zeros((0, config.dimension)))
        graph = build_cell_graph(config, domain, method, tol)
        mask = open_mask(config, model.p)
        units = cells_meeting_box(config, domain, tol)
        units = units[mask[units]]
        position = np.full(config.n, -1)
        position[units] = np.arange(len(units))
        edges = position[graph.open_edges(mask)]
        edges = edges[np.all(edges >= 0, axis=1)]
        labels = component_labels(len(units), edges)
        logger.debug('cell backend: %d open cells in %d clusters', len(units),
                     labels.max() + 1 if len(labels) else 0)

        def touch(region):
            return cell_touch(config, units, region, domain, tol)

        def find(y):
            return locate(config, y, tol).id
        return ClusterLabeling(units, labels, touch, domain, config.positions[units], find)
    return func
