"""
:mod:`voroperc` simulates Voronoi percolation: colour the cells of a
Poisson-Voronoi tessellation open independently with probability ``p`` and
study the clusters of open cells.  For most purposes, sample a configuration
with :func:`~.sample_ppp`, pick a model and evaluate an event; or let
:func:`~.mc_estimate` do all three over many replicas.


>>> from voroperc import Window, sample_ppp, continuum, box_crossing
>>> config = sample_ppp(Window.centered(4.0, 2, margin=4.0), seed=1)
>>> box_crossing(config, continuum(1.0), 2.0)
True
>>> box_crossing(config, continuum(0.0), 2.0)
False

"""

__version__ = '0.1.0'

from voroperc.ppp import Window, PointConfig, sample_ppp
from voroperc.cellgraph import build_cell_graph, locate, certify_box
from voroperc.models import continuum, truncated, compose, bernoulli_box_field, membership
from voroperc.events import box_crossing, local_uniqueness, dense_cluster, evaluate, register_event
from voroperc.estimators import ExperimentSpec, mc_estimate, estimate_pc, wilson_interval
