"""
Monte Carlo estimators.

An :class:`ExperimentSpec` names an event, a model template and a number of
replications.  Each replica samples its own configuration from the stream
``(master_seed, node, replica, attempt)`` in a window sized from the event's
declared extent plus a margin, evaluates the event and reports a bool; the
estimators only ever add these up, so results do not depend on how replicas
are spread over worker processes.

>>> wilson_interval(0, 10)[0]
0.0
>>> lo, hi = wilson_interval(5, 10)
>>> round(lo, 4), round(hi, 4)
(0.2366, 0.7634)
"""

import hashlib
import json
import logging
import math
import os
import time
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat

import numpy as np
from scipy import stats

from voroperc.backends import backend_by_name
from voroperc.cellgraph import certify_box
from voroperc.constants import (BATCH_SIZE, CONFIDENCE, DEFAULT_INTENSITY, MARGIN_FACTOR, MARGIN_MIN,
                                MAX_DIMENSION, MAX_MARGIN_DOUBLINGS, MIN_PC_TOLERANCE,
                                NODE_REPLICATION_CAP, THREADS_ENV)
from voroperc.events import evaluate, get_event
from voroperc.exceptions import BudgetExceeded, ValidationError
from voroperc.models import KINDS, MODES, ColoringModel, bernoulli_box_field, common_side, compose
from voroperc.ppp import Window, make_rng, sample_ppp

logger = logging.getLogger(__name__)

EstimatorReport = namedtuple('EstimatorReport',
                             ['n', 'successes', 'estimate', 'lower', 'upper', 'master_seed',
                              'wall_time', 'margin_violations', 'aux_mean'])
ReplicaResult = namedtuple('ReplicaResult', ['value', 'aux', 'violations'])
PcStep = namedtuple('PcStep', ['p', 'report', 'capped'])
PcEstimate = namedtuple('PcEstimate', ['estimate', 'lower', 'upper', 'steps', 'capped', 'spec'])
DominanceVerdict = namedtuple('DominanceVerdict',
                              ['verdict', 'report_a', 'report_b', 'statistic', 'p_value', 'separated'])
DecayFit = namedtuple('DecayFit',
                      ['form', 'exponent', 'rate', 'stderr', 'intercept', 'r_squared', 'ok', 'one_sided'])
REPORT_COLUMNS = ['n', 'successes', 'estimate', 'lower', 'upper', 'margin_violations', 'aux_mean']
ProfileReport = namedtuple('ProfileReport', ['p_grid', 'outcomes', 'violations'])
CorrelationReport = namedtuple('CorrelationReport', ['correlation', 'n', 'mean_a', 'mean_b'])

BACKENDS = ('auto', 'cellgraph', 'lattice')
SPEC_KEYS = ('dimension', 'event', 'params', 'model', 'n', 'master_seed', 'backend', 'h',
             'intensity', 'margin', 'certify')
MODEL_KEYS = ('kind', 'p', 'N', 'fields')
FIELD_KEYS = ('N', 'delta', 'mode')

#: Exponent of ``R`` used as the regressor of each decay form.
DECAY_FORMS = {
    'exp_R': lambda d: 1.0,
    'exp_R_pow': lambda d: (d - 1.0) / d,
    'exp_R_surface': lambda d: d - 1.0,
}


def _reject_unknown(data, allowed, what):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValidationError('unknown {0} keys: {1}'.format(what, ', '.join(unknown)))


def _check_model_template(data):
    if not isinstance(data, dict):
        raise ValidationError('model must be an object, got {0!r}'.format(data))
    _reject_unknown(data, MODEL_KEYS, 'model')
    kind = data.get('kind', 'continuum')
    if kind not in KINDS:
        raise ValidationError('unknown model kind {0!r}'.format(kind))
    fields = []
    for item in data.get('fields', []):
        _reject_unknown(item, FIELD_KEYS, 'field')
        if 'N' not in item or 'delta' not in item:
            raise ValidationError('box field needs N and delta, got {0!r}'.format(item))
        if item.get('mode', 'union') not in MODES:
            raise ValidationError('unknown field mode {0!r}'.format(item.get('mode')))
        if not 0.0 <= item['delta'] <= 1.0:
            raise ValidationError('delta must lie in [0, 1], got {0}'.format(item['delta']))
        fields.append({'N': float(item['N']), 'delta': float(item['delta']),
                       'mode': item.get('mode', 'union')})
    result = {'kind': kind, 'p': float(data.get('p', 0.5)), 'fields': fields}
    if kind == 'truncated':
        if 'N' not in data:
            raise ValidationError('truncated model needs N')
        result['N'] = float(data['N'])
    # validates p and N
    ColoringModel(kind, result['p'], result.get('N'))
    return result


class ExperimentSpec(object):
    '''
    Everything needed to reproduce an estimate.

    :param dimension: 2 to 4
    :param event: name of a registered event (see :func:`voroperc.events.register_event`)
    :param params: keyword parameters of the event
    :param model: model template ``{kind, p, N, fields: [{N, delta, mode}]}``;
                  box fields are resampled for every replica
    :param n: number of replications
    :param backend: ``'auto'``, ``'cellgraph'`` or ``'lattice'``
    :param h: lattice spacing for the lattice backend
    :param margin: fixed margin; None applies :func:`margin_policy`
    :param certify: resample replicas whose tessellation is not certified on
                    the analysis box
    '''

    def __init__(self, dimension=2, event='crossing', params=None, model=None, n=BATCH_SIZE,
                 master_seed=0, backend='auto', h=None, intensity=DEFAULT_INTENSITY, margin=None,
                 certify=True):
        if int(dimension) != dimension or not 2 <= dimension <= MAX_DIMENSION:
            raise ValidationError('dimension must be an integer in [2, {0}], got {1}'.format(
                MAX_DIMENSION, dimension))
        if int(n) != n or n < 1:
            raise ValidationError('n must be a positive integer, got {0}'.format(n))
        if int(master_seed) != master_seed or master_seed < 0:
            raise ValidationError('master seed must be a non-negative integer, got {0}'.format(master_seed))
        if backend not in BACKENDS:
            raise ValidationError('unknown backend {0!r}'.format(backend))
        if h is not None and not h > 0:
            raise ValidationError('lattice spacing must be positive, got {0}'.format(h))
        if not (np.isfinite(intensity) and intensity > 0):
            raise ValidationError('intensity must be positive, got {0}'.format(intensity))
        if margin is not None and not margin >= 0:
            raise ValidationError('margin must be non-negative, got {0}'.format(margin))
        self.dimension = int(dimension)
        self.event = event
        self.params = dict(params or {})
        self.model = _check_model_template(model if model is not None else {'kind': 'continuum'})
        self.n = int(n)
        self.master_seed = int(master_seed)
        self.backend = backend
        self.h = None if h is None else float(h)
        self.intensity = float(intensity)
        self.margin = None if margin is None else float(margin)
        self.certify = bool(certify)
        if backend == 'cellgraph' and (self.model['kind'] != 'continuum' or self.model['fields']):
            raise ValidationError('the cellgraph backend only handles continuum models without box fields')
        self.extent()

    @classmethod
    def from_dict(cls, data):
        _reject_unknown(data, SPEC_KEYS, 'experiment')
        return cls(**data)

    def to_dict(self):
        return {'dimension': self.dimension, 'event': self.event, 'params': dict(self.params),
                'model': json.loads(json.dumps(self.model)), 'n': self.n,
                'master_seed': self.master_seed, 'backend': self.backend, 'h': self.h,
                'intensity': self.intensity, 'margin': self.margin, 'certify': self.certify}

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))

    def spec_hash(self):
        return hashlib.sha256(self.canonical_json().encode('utf-8')).hexdigest()

    def replace(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return ExperimentSpec.from_dict(data)

    def with_value(self, name, value):
        '''
        The spec with one grid parameter set: ``'p'`` is the model level,
        ``'n'`` and ``'master_seed'`` are top level, anything else is an
        event parameter.
        '''
        if name == 'p':
            return self.replace(model=dict(self.model, p=value))
        if name in ('n', 'master_seed', 'intensity'):
            return self.replace(**{name: value})
        return self.replace(params=dict(self.params, **{name: value}))

    @property
    def increasing(self):
        return get_event(self.event).increasing

    def extent(self):
        """Radius of the analysis box ``Lambda_extent`` the event reads."""
        try:
            value = get_event(self.event).extent(self.dimension, **self.params)
        except TypeError as e:
            raise ValidationError('bad parameters {0!r} for event {1!r}: {2}'.format(
                self.params, self.event, e))
        if not value > 0:
            raise ValidationError('event {0!r} has non-positive extent {1}'.format(self.event, value))
        return float(value)

    def alignment(self):
        sides = [self.model['N']] if self.model['kind'] == 'truncated' else []
        sides.extend(f['N'] for f in self.model['fields'])
        return common_side(sides)

    def required_margin(self):
        return 2 * self.model['N'] if self.model['kind'] == 'truncated' else 0.0

    def window(self, attempt=0):
        '''
        Sampling window of margin resample ``attempt``: the analysis box
        ``Lambda_extent`` plus a margin doubled ``attempt`` times, widened so
        that aligned models tile it exactly.
        '''
        extent = self.extent()
        base = self.margin if self.margin is not None else \
            margin_policy(extent, self.dimension, self.intensity)
        margin = max(base * 2 ** attempt, self.required_margin())
        side = self.alignment()
        if side:
            margin = math.ceil((extent + margin) / side - 1e-9) * side - extent
        return Window.centered(extent, self.dimension, margin)

    def needs_certification(self):
        return self.certify and (self.model['kind'] == 'continuum' or get_event(self.event).tessellation)

    def build_model(self, window, field_seeds, p=None):
        m = self.model
        model = ColoringModel(m['kind'], m['p'] if p is None else p, m.get('N'))
        for item, seed in zip(m['fields'], field_seeds):
            model = compose(model, bernoulli_box_field(item['N'], item['delta'], window, seed), item['mode'])
        return model

    def backend_function(self):
        return None if self.backend == 'auto' else backend_by_name(self.backend, self.h)

    def __eq__(self, other):
        return isinstance(other, ExperimentSpec) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.canonical_json())

    def __repr__(self):
        return '<ExperimentSpec {0} d={1} {2} n={3} seed={4}>'.format(
            self.event, self.dimension, self.params, self.n, self.master_seed)


def margin_policy(extent, dimension, intensity=DEFAULT_INTENSITY):
    '''
    Default margin around ``Lambda_extent``: cells of a Poisson tessellation
    in a box of volume ``V`` have diameter of order ``log(V)^(1/d)``.

    >>> margin_policy(1, 2)
    8.0
    '''
    scale = intensity ** (-1.0 / dimension)
    count = intensity * (2.0 * extent) ** dimension
    return scale * max(MARGIN_MIN, MARGIN_FACTOR * math.log1p(count) ** (1.0 / dimension))


def wilson_interval(successes, total, confidence=CONFIDENCE):
    '''
    Wilson score interval for a binomial proportion.

    :returns: ``(lower, upper)``, always containing ``successes / total``
    '''
    if total <= 0:
        raise ValidationError('need at least one trial')
    if not 0 <= successes <= total:
        raise ValidationError('successes {0} outside [0, {1}]'.format(successes, total))
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p_hat = float(successes) / total
    denominator = 1 + z ** 2 / total
    center = (p_hat + z ** 2 / (2 * total)) / denominator
    spread = z * math.sqrt(p_hat * (1 - p_hat) / total + z ** 2 / (4.0 * total ** 2)) / denominator
    return max(0.0, min(p_hat, center - spread)), min(1.0, max(p_hat, center + spread))


def thread_count(threads=None):
    '''
    Worker processes to use: ``threads`` if given, else the ``VORO_THREADS``
    environment variable, else the number of cores.
    '''
    if threads is None:
        value = os.environ.get(THREADS_ENV)
        if not value:
            return os.cpu_count() or 1
        try:
            threads = int(value)
        except ValueError:
            raise ValidationError('{0} must be an integer, got {1!r}'.format(THREADS_ENV, value))
    if threads < 1:
        raise ValidationError('thread count must be positive, got {0}'.format(threads))
    return threads


def _replica_stream(spec, node, replica, attempt, arm):
    key = (node, replica, attempt) if arm is None else (node, replica, attempt, arm)
    return make_rng(spec.master_seed, *key)


def sample_replica(spec, node, replica, arm=None):
    '''
    The certified configuration of one replica.

    :returns: ``(config, window, detector_seed, field_seeds, attempts)``
    :raises BudgetExceeded: when no margin up to ``MAX_MARGIN_DOUBLINGS``
                            doublings certifies
    '''
    for attempt in range(MAX_MARGIN_DOUBLINGS + 1):
        window = spec.window(attempt)
        rng = _replica_stream(spec, node, replica, attempt, arm)
        seeds = [int(s) for s in rng.integers(0, 2 ** 63, size=2 + len(spec.model['fields']))]
        config = sample_ppp(window, spec.intensity, seeds[0])
        if spec.needs_certification() and not certify_box(config, window.analysis):
            logger.info('replica %d of node %d: margin %g not certified, resampling', replica, node,
                        window.margin)
            continue
        return config, window, seeds[1], seeds[2:], attempt
    raise BudgetExceeded('replica {0} of node {1}: no certified window after {2} margin doublings'.format(
        replica, node, MAX_MARGIN_DOUBLINGS))


def run_replica(spec, node, replica, arm=None):
    config, window, seed, field_seeds, attempts = sample_replica(spec, node, replica, arm)
    model = spec.build_model(window, field_seeds)
    outcome = evaluate(spec.event, config, model, spec.backend_function(), seed, **spec.params)
    return ReplicaResult(outcome.value, outcome.aux, attempts)


def joint_replica(spec, node, replica, variants, arm=None):
    '''
    Evaluate several ``(p, params)`` variants of the event on the same
    configuration and box fields; ``p`` None keeps the template level.
    '''
    config, window, seed, field_seeds, attempts = sample_replica(spec, node, replica, arm)
    backend = spec.backend_function()
    values = []
    for p, params in variants:
        model = spec.build_model(window, field_seeds, p)
        values.append(evaluate(spec.event, config, model, backend, seed, **dict(spec.params, **params)).value)
    return values, attempts


def _parallel(func, spec, node, replicas, threads, *extra):
    replicas = list(replicas)
    workers = min(thread_count(threads), len(replicas))
    args = [repeat(spec), repeat(node), replicas] + [repeat(e) for e in extra]
    if workers <= 1:
        return list(map(func, *args))
    chunk = max(1, len(replicas) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, *args, chunksize=chunk))


def run_replicas(spec, node, replicas, threads=None, arm=None):
    """:func:`run_replica` over ``replicas``, in worker processes when ``threads > 1``."""
    return _parallel(run_replica, spec, node, replicas, threads, arm)


def _mean_aux(results):
    values = [r.aux for r in results if isinstance(r.aux, (int, float, np.integer, np.floating))
              and not isinstance(r.aux, bool)]
    return float(np.mean(values)) if values else None


def summarize(results, master_seed, wall_time=0.0):
    """An :class:`EstimatorReport` from a list of :class:`ReplicaResult`."""
    n = len(results)
    k = sum(1 for r in results if r.value)
    lower, upper = wilson_interval(k, n)
    return EstimatorReport(n, k, float(k) / n, lower, upper, master_seed, wall_time,
                           sum(r.violations for r in results), _mean_aux(results))


def mc_estimate(spec, node=0, threads=None, arm=None):
    '''
    Estimate the probability of ``spec``'s event from ``spec.n`` replicas.

    :param node: grid node index; distinct nodes use independent streams
    :param threads: worker processes; see :func:`thread_count`
    :param arm: extra stream tag separating independent arms of a test
    :returns: :class:`EstimatorReport`; every field but ``wall_time`` is a
              function of ``(spec, node, arm)`` only
    '''
    started = time.perf_counter()
    results = run_replicas(spec, node, range(spec.n), threads, arm)
    report = summarize(results, spec.master_seed, time.perf_counter() - started)
    logger.info('%r node %d: %d/%d = %.4f [%.4f, %.4f], %d margin violations', spec, node,
                report.successes, report.n, report.estimate, report.lower, report.upper,
                report.margin_violations)
    return report


def sweep(spec, name, values, coupled=False, threads=None):
    '''
    :func:`mc_estimate` at every value of the grid parameter ``name`` (see
    :meth:`ExperimentSpec.with_value`).

    :param coupled: reuse the replica streams of node 0 at every value, so
                    that pathwise monotone events give monotone estimates
    :returns: list of ``(value, EstimatorReport)``
    '''
    return [(value, mc_estimate(spec.with_value(name, value), 0 if coupled else i, threads))
            for i, value in enumerate(values)]


def estimate_pc(dimension, L, tolerance, defaults=None, batch=BATCH_SIZE, cap=NODE_REPLICATION_CAP,
                threads=None):
    '''
    Bisect for the level at which left-right crossing of ``Lambda_L``
    has probability one half.

    Each midpoint is sampled in batches of ``batch`` replicas until the
    Wilson interval excludes ``1/2`` or ``cap`` replicas have been used; the
    search stops once the bracket is at most ``tolerance`` wide.

    :param defaults: further :class:`ExperimentSpec` fields (seed, backend,
                     intensity, ...)
    :returns: :class:`PcEstimate` whose ``estimate`` is the last midpoint and
              ``spec`` the bisection template (its level is set per step)
    '''
    if not tolerance >= MIN_PC_TOLERANCE:
        raise ValidationError('tolerance must be at least {0}, got {1}'.format(MIN_PC_TOLERANCE, tolerance))
    data = dict(defaults or {})
    data.update(dimension=dimension, event='crossing', params={'L': L}, n=batch)
    spec = ExperimentSpec.from_dict(data)
    lo, hi = 0.0, 1.0
    steps = []
    capped = 0
    while True:
        mid = (lo + hi) / 2.0
        node_spec = spec.with_value('p', mid)
        started = time.perf_counter()
        results = []
        while True:
            results.extend(run_replicas(node_spec, len(steps), range(len(results), len(results) + batch),
                                        threads))
            lower, upper = wilson_interval(sum(1 for r in results if r.value), len(results))
            if lower > 0.5 or upper < 0.5 or len(results) + batch > cap:
                break
        report = summarize(results, spec.master_seed, time.perf_counter() - started)
        undecided = report.lower <= 0.5 <= report.upper
        if undecided:
            capped += 1
            logger.warning('p=%.6g: crossing probability not separated from 1/2 after %d replicas',
                           mid, report.n)
        steps.append(PcStep(mid, report, undecided))
        if report.estimate >= 0.5:
            hi = mid
        else:
            lo = mid
        logger.info('bisection step %d: p=%.6g crossing %.4f, bracket [%.6g, %.6g]', len(steps), mid,
                    report.estimate, lo, hi)
        if hi - lo <= tolerance:
            return PcEstimate(mid, lo, hi, steps, capped, spec)


def dominance_test(spec_a, spec_b, alpha=0.01, threads=None):
    '''
    One-sided test of ``P_A[event] <= P_B[event]`` on independent samples.

    The verdict is ``'violated'`` when ``P_A > P_B`` is significant at
    ``alpha``, ``'consistent'`` when the estimates agree with the inequality
    and ``'inconclusive'`` otherwise; ``separated`` reports a significant
    ``P_A < P_B``.
    '''
    for spec in (spec_a, spec_b):
        if not spec.increasing:
            raise ValidationError('dominance needs an increasing event, got {0!r}'.format(spec.event))
    report_a = mc_estimate(spec_a, 0, threads, arm=0)
    report_b = mc_estimate(spec_b, 0, threads, arm=1)
    pooled = float(report_a.successes + report_b.successes) / (report_a.n + report_b.n)
    se = math.sqrt(pooled * (1 - pooled) * (1.0 / report_a.n + 1.0 / report_b.n))
    z = (report_a.estimate - report_b.estimate) / se if se > 0 else 0.0
    p_value = float(stats.norm.sf(z))
    if p_value < alpha:
        verdict = 'violated'
    elif report_a.estimate <= report_b.estimate:
        verdict = 'consistent'
    else:
        verdict = 'inconclusive'
    separated = bool(stats.norm.cdf(z) < alpha)
    logger.info('dominance %.4f vs %.4f: z=%.3f, %s', report_a.estimate, report_b.estimate, z, verdict)
    return DominanceVerdict(verdict, report_a, report_b, z, p_value, separated)


def sprinkling_pairs(spec, eps, delta):
    '''
    The two comparisons of a truncated model at level ``p`` with its
    sprinkled versions, as ``(smaller, larger)`` spec pairs:

    * level ``p - eps`` against level ``p`` minus a field of density ``delta``
    * level ``p`` plus a field of density ``delta`` against level ``p + eps``

    Fields have the model's side ``N``.
    '''
    m = spec.model
    if m['kind'] != 'truncated':
        raise ValidationError('sprinkling compares truncated models, got {0!r}'.format(m['kind']))
    p = m['p']
    if not (0 <= p - eps and p + eps <= 1):
        raise ValidationError('p +- eps must stay in [0, 1], got p={0} eps={1}'.format(p, eps))

    def variant(level, mode=None):
        fields = list(m['fields'])
        if mode is not None:
            fields.append({'N': m['N'], 'delta': delta, 'mode': mode})
        return spec.replace(model=dict(m, p=level, fields=fields))
    return [(variant(p - eps), variant(p, 'difference')),
            (variant(p, 'union'), variant(p + eps))]


def decay_fit(radii, reports, form='exp_R', dimension=2):
    '''
    Weighted least-squares fit of ``log P(R) = a - rate * R^e``.

    The regressor exponent ``e`` is 1 for ``exp_R``, ``(d-1)/d`` for
    ``exp_R_pow`` and ``d-1`` for ``exp_R_surface``.  Weights are the inverse
    delta-method variances of ``log k/n``; radii with no success are left out
    of the fit.  With fewer than two positive estimates the result is the
    one-sided bound implied by the Wilson upper limits of the zero counts.

    :returns: :class:`DecayFit`; ``ok`` when the rate exceeds twice its
              standard error and the weighted R^2 is at least 0.9
    '''
    if form not in DECAY_FORMS:
        raise ValidationError('unknown decay form {0!r}; known: {1}'.format(form, ', '.join(sorted(DECAY_FORMS))))
    if len(radii) < 3 or len(radii) != len(reports):
        raise ValidationError('need at least three radii with one report each')
    exponent = DECAY_FORMS[form](dimension)
    x = np.asarray(radii, dtype=float) ** exponent
    k = np.array([r.successes for r in reports], dtype=float)
    n = np.array([r.n for r in reports], dtype=float)
    positive = k > 0
    if positive.sum() < 2:
        bounds = [-math.log(wilson_interval(int(ki), int(ni))[1]) / xi
                  for ki, ni, xi in zip(k[~positive], n[~positive], x[~positive]) if xi > 0]
        rate = max(bounds) if bounds else 0.0
        logger.info('decay fit %s: too few positive estimates, rate >= %.4g', form, rate)
        return DecayFit(form, exponent, rate, float('nan'), float('nan'), float('nan'), False, True)
    x, k, n = x[positive], k[positive], n[positive]
    p_hat = k / n
    y = np.log(p_hat)
    sigma = np.sqrt((1 - p_hat + 1.0 / n) / (n * p_hat))
    coef, cov = np.polyfit(x, y, 1, w=1.0 / sigma, cov='unscaled')
    slope, intercept = coef
    weights = sigma ** -2
    fitted = np.polyval(coef, x)
    mean = np.sum(weights * y) / np.sum(weights)
    ss_res = np.sum(weights * (y - fitted) ** 2)
    ss_tot = np.sum(weights * (y - mean) ** 2)
    r_squared = float(1 - ss_res / ss_tot) if ss_tot > 0 else 0.0
    rate = float(-slope)
    stderr = float(math.sqrt(cov[0, 0]))
    ok = rate > 2 * stderr and r_squared >= 0.9
    logger.info('decay fit %s: rate %.4g +- %.2g, R^2 %.3f', form, rate, stderr, r_squared)
    return DecayFit(form, exponent, rate, stderr, float(intercept), r_squared, bool(ok), False)


def pathwise_profile(spec, p_grid, threads=None):
    '''
    Evaluate an increasing event at every level of ``p_grid`` (ascending) on
    one configuration per replica.

    :returns: :class:`ProfileReport`; ``outcomes`` is an ``(n, len(p_grid))``
              bool array and ``violations`` counts replicas whose outcomes
              decrease along the grid
    '''
    if not spec.increasing:
        raise ValidationError('pathwise profiles need an increasing event, got {0!r}'.format(spec.event))
    p_grid = [float(p) for p in p_grid]
    if p_grid != sorted(p_grid):
        raise ValidationError('p grid must be ascending')
    variants = [(p, {}) for p in p_grid]
    rows = _parallel(joint_replica, spec, 0, range(spec.n), threads, variants)
    outcomes = np.array([values for values, _ in rows], dtype=bool).reshape(spec.n, len(p_grid))
    violations = int(np.sum(np.any(outcomes[:, :-1] & ~outcomes[:, 1:], axis=1)))
    if violations:
        logger.warning('%d of %d replicas are not monotone along %s', violations, spec.n, p_grid)
    return ProfileReport(p_grid, outcomes, violations)


def membership_correlation(N, p, distance, n, dimension=2, master_seed=0, intensity=DEFAULT_INTENSITY,
                           threads=None):
    '''
    Pearson correlation, over ``n`` replicas, of the truncated model's
    membership at two points ``distance`` apart along the first axis.

    Memberships of points further apart than ``4 N`` are independent, so the
    correlation should vanish within ``O(1/sqrt(n))``.
    '''
    d = dimension
    a = np.zeros(d)
    a[0] = -distance / 2.0
    spec = ExperimentSpec(d, 'open_at', {'x': a.tolist()}, {'kind': 'truncated', 'N': N, 'p': p}, n,
                          master_seed, 'lattice', intensity=intensity)
    variants = [(None, {'x': a.tolist()}), (None, {'x': (-a).tolist()})]
    rows = _parallel(joint_replica, spec, 0, range(n), threads, variants)
    values = np.array([v for v, _ in rows], dtype=float).reshape(n, 2)
    mean_a, mean_b = values.mean(axis=0)
    if values[:, 0].std() == 0 or values[:, 1].std() == 0:
        logger.info('membership is constant at one point; correlation taken as 0')
        correlation = 0.0
    else:
        correlation = float(np.corrcoef(values[:, 0], values[:, 1])[0, 1])
    return CorrelationReport(correlation, n, float(mean_a), float(mean_b))


def wilson_coverage(q, n, meta=1000, confidence=CONFIDENCE, seed=0):
    '''
    Fraction of ``meta`` simulated Binomial(``n``, ``q``) counts whose
    Wilson interval covers ``q``.
    '''
    counts = make_rng(seed).binomial(n, q, size=meta)
    covered = 0
    for k in counts:
        lower, upper = wilson_interval(int(k), n, confidence)
        covered += lower <= q <= upper
    return float(covered) / meta


def report_row(report):
    """The report fields written to CSV, wall time excluded."""
    return [report.n, report.successes, report.estimate, report.lower, report.upper,
            report.margin_violations, report.aux_mean]
