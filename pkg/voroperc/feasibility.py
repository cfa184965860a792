"""
Small linear programs over Voronoi cell constraints, solved with HiGHS
through :func:`scipy.optimize.linprog`.

Cell constraints of a site ``x`` are written in coordinates relative to ``x``:
a competitor at relative position ``w`` contributes the half-space
``2 w . z <= |w|^2``.
"""

import logging

import numpy as np
from scipy.optimize import linprog

from voroperc.constants import SLACK_CAP
from voroperc.exceptions import FeasibilityError, ValidationError

logger = logging.getLogger(__name__)

#: Relative coordinates are confined to ``[-SUPPORT_BOUND, SUPPORT_BOUND]^d``
#: times the problem scale; a support value at the bound means unbounded.
SUPPORT_BOUND = 1e6


def bisector_rows(relative):
    """Half-space rows ``(A, b)`` of the competitors at ``relative`` positions."""
    relative = np.asarray(relative, dtype=float)
    return 2.0 * relative, np.einsum('ij,ij->i', relative, relative)


def box_rows(lo, hi):
    """Rows of ``lo <= z <= hi``."""
    lo = np.asarray(lo, dtype=float)
    d = lo.shape[0]
    eye = np.eye(d)
    return np.vstack([eye, -eye]), np.concatenate([np.asarray(hi, dtype=float), -lo])


def _solve(c, A_ub, b_ub, A_eq, b_eq, bounds):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method='highs')
    if res.status != 0:
        raise FeasibilityError('linear solver did not reach an optimum: {0}'.format(res.message))
    return res


def chebyshev_slack(A_ub, b_ub, A_eq=None, b_eq=None, cap=SLACK_CAP):
    '''
    Maximise the smallest normalised slack ``t`` of ``A_ub z <= b_ub`` subject
    to ``A_eq z = b_eq``.

    Every row is scaled to unit norm, so ``t`` is the Euclidean distance from
    ``z`` to the nearest constraint hyperplane (within the equality subspace).
    ``t`` is capped at ``cap`` and unbounded below, which keeps the problem
    feasible and bounded: a negative optimum means the constraints have no
    common point.

    :returns: ``(z, t)``
    '''
    A_ub = np.asarray(A_ub, dtype=float)
    d = A_ub.shape[1] if A_ub.ndim == 2 else np.asarray(A_eq).shape[-1]
    A_ub = A_ub.reshape(-1, d)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    norms = np.linalg.norm(A_ub, axis=1)
    if np.any(norms == 0):
        raise ValidationError('constraint row with zero normal')
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A = b = None
    if A_ub.shape[0]:
        A = np.hstack([A_ub / norms[:, None], np.ones((A_ub.shape[0], 1))])
        b = b_ub / norms
    Aeq = beq = None
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, d)
        scale = np.linalg.norm(A_eq, axis=1)
        Aeq = np.hstack([A_eq / scale[:, None], np.zeros((A_eq.shape[0], 1))])
        beq = np.asarray(b_eq, dtype=float).reshape(-1) / scale
    bounds = [(None, None)] * d + [(None, cap)]
    res = _solve(c, A, b, Aeq, beq, bounds)
    return res.x[:d], float(res.x[-1])


def support(A_ub, b_ub, direction, scale=1.0):
    '''
    ``max direction . z`` over ``A_ub z <= b_ub``; ``inf`` when unbounded.

    The region must contain the origin (a cell contains its own site).
    '''
    direction = np.asarray(direction, dtype=float)
    d = direction.shape[0]
    bound = SUPPORT_BOUND * max(scale, 1.0)
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, d)
    res = _solve(-direction, A_ub if A_ub.shape[0] else None,
                 np.asarray(b_ub, dtype=float) if A_ub.shape[0] else None,
                 None, None, [(-bound, bound)] * d)
    value = -res.fun
    if np.max(np.abs(res.x)) >= bound * (1 - 1e-9):
        return np.inf
    return value


def support_box(relative, scale=1.0):
    '''
    Axis-aligned bounding box ``(lo, hi)`` of the cell cut out by competitors
    at ``relative`` positions, in relative coordinates.  Infinite entries mark
    an unbounded direction.
    '''
    relative = np.asarray(relative, dtype=float)
    d = relative.shape[1]
    A, b = bisector_rows(relative)
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        hi[i] = support(A, b, e, scale)
        lo[i] = -support(A, b, -e, scale)
        if not (np.isfinite(lo[i]) and np.isfinite(hi[i])):
            logger.debug('cell unbounded along axis %d', i)
    return lo, hi
