"""
Clustering backends.

Each module provides a factory returning a function
``func(config, model, domain) -> ClusterLabeling``; pass the function, not
the factory, wherever a ``backend`` is expected.
"""

from voroperc.backends.cells import cellgraph_backend
from voroperc.backends.lattice import lattice_backend
from voroperc.exceptions import ValidationError


def backend_by_name(name, h=None):
    '''
    The backend function named in an experiment descriptor:
    ``'cellgraph'`` or ``'lattice'`` (with spacing ``h``).
    '''
    if name == 'cellgraph':
        return cellgraph_backend()
    if name == 'lattice':
        return lattice_backend(h)
    raise ValidationError('unknown backend {0!r}'.format(name))
