"""
Numerical defaults shared by every module.

Values are plain module-level constants so that an experiment descriptor can
name them and the documentation can list them with :mod:`sphinx.ext.autodoc`.
"""

#: Geometric tolerance in window units.  Faces whose feasible slab is thinner
#: than this are reported as degenerate non-edges; distance ties within
#: ``EPS_GEOM * (1 + distance)`` count as ties.
EPS_GEOM = 1e-9

#: Upper bound on the expected number of Poisson points in one window.
COUNT_CAP = 10 ** 8

#: Upper bound on the number of sites of one lattice field.
GRID_SITE_CAP = 2 ** 26

DEFAULT_INTENSITY = 1.0

#: Default lattice oracle resolution: (analysis box side) / divisions.
LATTICE_DIVISIONS = {2: 2048, 3: 256, 4: 32}

#: Coarser resolution used by the lattice clustering backend inside Monte
#: Carlo loops, in sites per unit length.
LATTICE_SITES_PER_UNIT = {2: 8, 3: 4, 4: 2}

MAX_DIMENSION = 4

# Feasibility problems: the Chebyshev slack is capped so that problems with an
# unbounded feasible face stay bounded.
SLACK_CAP = 1.0

#: Initial candidate radius of the face test, in units of ``|x - y|``.
CANDIDATE_RADIUS_FACTOR = 4.0

# Clipped face point sets larger than this go to the LP instead.
CLIP_POINT_CAP = 256

# Points near a box tried as single-bisector separators before the LP.
SEPARATOR_CANDIDATES = 8

# Margin policy: margin = max(MARGIN_MIN, MARGIN_FACTOR * log(1 + vol) ** (1/d))
MARGIN_MIN = 8.0
MARGIN_FACTOR = 4.0
MAX_MARGIN_DOUBLINGS = 4

CONFIDENCE = 0.95
BATCH_SIZE = 200
NODE_REPLICATION_CAP = 4000
MIN_PC_TOLERANCE = 0.005

DELTA_GRID = (0.01, 0.02, 0.05, 0.1)

#: Spawn-key tag separating box-field streams from configuration streams.
FIELD_STREAM_TAG = 0xB0C5

THREADS_ENV = "VORO_THREADS"

SCHEMA_VERSION = 1

#: Significant digits of every float written to CSV or JSON.
FLOAT_DIGITS = 17
