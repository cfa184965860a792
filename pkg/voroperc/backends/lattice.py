import logging

import numpy as np
from scipy import ndimage

from voroperc.backends.tools import ClusterLabeling
from voroperc.cellgraph import grid_sites
from voroperc.constants import EPS_GEOM, LATTICE_SITES_PER_UNIT
from voroperc.models import membership_many

logger = logging.getLogger(__name__)


def default_spacing(dimension):
    return 1.0 / LATTICE_SITES_PER_UNIT.get(dimension, 2)


def lattice_backend(h=None, tol=EPS_GEOM):
    '''
    Returns a function clustering the open region of any model on the grid
    ``domain ∩ hZ^d``.

    :param h: grid spacing; defaults to :func:`default_spacing` of the
              configuration's dimension

    Sites are open by :func:`~voroperc.models.membership_many`; open sites
    sharing a grid edge are connected.  Units of the returned
    :class:`~voroperc.backends.tools.ClusterLabeling` are flat (row-major)
    site indices.
    '''

    def func(config, model, domain):
        step = default_spacing(config.dimension) if h is None else h
        start, shape = grid_sites(domain, step)
        axes = [(s + np.arange(k)) * step for s, k in zip(start, shape)]
        sites = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing='ij')], axis=1)
        # sites may overshoot the domain by rounding
        sites = np.clip(sites, domain.lo, domain.hi)
        opened = membership_many(sites, model, config, tol).reshape(shape)
        labeled, count = ndimage.label(opened)
        units = np.flatnonzero(labeled.ravel())
        labels = labeled.ravel()[units] - 1
        coordinates = sites[units]
        logger.debug('lattice backend h=%g: %d open sites in %d clusters', step, len(units), count)

        def touch(region):
            return region.contains(coordinates, tol)

        def find(y):
            index = np.round(np.asarray(y, dtype=float) / step).astype(int) - start
            if np.any(index < 0) or np.any(index >= np.array(shape)):
                return None
            return int(np.ravel_multi_index(tuple(index), shape))
        return ClusterLabeling(units, labels, touch, domain, coordinates, find, step)
    return func
