"""
Command-line driver.

Every subcommand resolves its options (defaults, then ``--config``, then a
previous run's ``--manifest``, then flags), runs the estimators and writes
``<subcommand>.csv`` and ``<subcommand>.manifest.json`` to ``--out``.
Floats are written with 17 significant digits and the CSV holds no timing,
so a re-run from a manifest reproduces it byte for byte.  The manifest also
lists the resolved experiment descriptors the run estimated.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from itertools import product

import numpy as np

import voroperc
from voroperc import oracles
from voroperc.constants import DELTA_GRID, FLOAT_DIGITS, SCHEMA_VERSION
from voroperc.estimators import (REPORT_COLUMNS, ExperimentSpec, decay_fit, dominance_test, estimate_pc,
                                 mc_estimate, report_row, sprinkling_pairs)
from voroperc.exceptions import InvariantViolation, ValidationError, VoroError

logger = logging.getLogger(__name__)

DEFAULTS = {
    'dim': 2,
    'model': 'continuum',
    'p': [0.5],
    'L': [16.0],
    'n': 200,
    'seed': 0,
    'N': 4.0,
    'delta': list(DELTA_GRID),
    'eps': 0.1,
    'alpha': 0.01,
    'backend': 'auto',
    'tol': 0.02,
    'R': [10.0],
    'M': [80.0],
    'ell': 2.0,
    'radii': [4.0, 8.0, 12.0, 16.0],
    'form': 'exp_R',
    'intensity': 1.0,
}

GRID_OPTIONS = ('p', 'L', 'delta', 'R', 'M', 'radii')

COLUMNS = {
    'crossing': ['dim', 'L', 'p'] + REPORT_COLUMNS,
    'uniqueness-curve': ['dim', 'L', 'p'] + REPORT_COLUMNS,
    'estimate-pc': ['dim', 'L', 'estimate', 'lower', 'upper', 'steps', 'capped', 'replicas'],
    'chemdist': ['dim', 'R', 'M'] + REPORT_COLUMNS,
    'dense-cluster': ['dim', 'L', 'ell', 'p'] + REPORT_COLUMNS,
    'origin-cluster': ['dim', 'p', 'R'] + REPORT_COLUMNS,
    'dominance': ['dim', 'N', 'p', 'eps', 'delta', 'direction', 'verdict', 'estimate_a', 'estimate_b',
                  'statistic', 'p_value', 'separated'],
    'decay-fit': ['dim', 'p', 'R'] + REPORT_COLUMNS + ['form', 'exponent', 'rate', 'stderr', 'intercept',
                                                       'r_squared', 'ok', 'one_sided'],
    'selftest': ['check', 'cases'],
}

DESCRIPTIONS = {
    'crossing': 'left-right crossing probability of Lambda_L over a (p, L) grid',
    'uniqueness-curve': 'probability of a unique crossing cluster of the annulus over a (p, L) grid',
    'estimate-pc': 'level where the crossing probability of Lambda_L is 1/2, for each L',
    'chemdist': 'probability that cells meeting Lambda_R are M-close in the cell graph, over (R, M)',
    'dense-cluster': 'probability of an ell-dense cluster in Lambda_L over a (p, L) grid',
    'origin-cluster': 'probability that the origin cluster has finite diameter at least R',
    'dominance': 'sprinkling comparisons of the truncated model over the delta grid',
    'decay-fit': 'origin-cluster diameter tail and its exponential fit',
    'selftest': 'compare the library against brute-force oracles',
}


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as :class:`ValidationError` (exit code 1)."""

    def error(self, message):
        raise ValidationError(message)


def floats(text):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('expected a comma separated list of numbers, got {0!r}'.format(text))


def _options_parser():
    parser = ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parser.add_argument('--config', help='JSON file of options')
    parser.add_argument('--manifest', help='manifest of a previous run to repeat')
    parser.add_argument('--out', help='output directory (default: current directory)')
    parser.add_argument('-v', '--verbose', action='count', help='more logging; repeat for debug output')
    parser.add_argument('--dim', type=int, help='dimension, 2 to 4')
    parser.add_argument('--model', choices=('continuum', 'truncated'), help='colouring rule')
    parser.add_argument('--p', type=floats, help='levels')
    parser.add_argument('--L', type=floats, help='box radii')
    parser.add_argument('--n', type=int, help='replications per grid node (batch size for estimate-pc)')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--N', type=float, help='box side of the truncated model')
    parser.add_argument('--delta', type=floats, help='box field densities')
    parser.add_argument('--eps', type=float, help='sprinkling increment of p')
    parser.add_argument('--alpha', type=float, help='significance level')
    parser.add_argument('--backend', choices=('auto', 'cellgraph', 'lattice'), help='clustering backend')
    parser.add_argument('--tol', type=float, help='bisection tolerance')
    parser.add_argument('--R', type=floats, help='radii of the chemical distance event')
    parser.add_argument('--M', type=floats, help='path length bounds')
    parser.add_argument('--ell', type=float, help='probe box radius of dense-cluster')
    parser.add_argument('--radii', type=floats, help='radii of the origin-cluster tail')
    parser.add_argument('--form', choices=('exp_R', 'exp_R_pow', 'exp_R_surface'), help='decay form')
    parser.add_argument('--intensity', type=float, help='points per unit volume')
    return parser


def build_parser():
    common = _options_parser()
    parser = ArgumentParser(prog='voroperc', description=__doc__, parents=[common],
                            formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version', version=voroperc.__version__)
    subparsers = parser.add_subparsers(dest='subcommand', metavar='subcommand')
    for name in COLUMNS:
        subparsers.add_parser(name, parents=[common], help=DESCRIPTIONS[name],
                              description=DESCRIPTIONS[name],
                              epilog='CSV columns: {0}'.format(', '.join(COLUMNS[name])))
    return parser


def _read_json(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except (IOError, OSError, ValueError) as e:
        raise ValidationError('cannot read {0}: {1}'.format(path, e))


def check_options(data):
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ValidationError('unknown options: {0}'.format(', '.join(unknown)))
    result = {}
    for key, value in data.items():
        if key in GRID_OPTIONS and not isinstance(value, list):
            value = [value]
        result[key] = value
    return result


def resolve(args):
    '''
    The subcommand and its options, from defaults, ``--config``,
    ``--manifest`` and flags, in that order of precedence.
    '''
    options = dict(DEFAULTS)
    subcommand = getattr(args, 'subcommand', None)
    if getattr(args, 'config', None):
        options.update(check_options(_read_json(args.config)))
    if getattr(args, 'manifest', None):
        manifest = _read_json(args.manifest)
        if subcommand is not None and subcommand != manifest.get('subcommand'):
            raise ValidationError('manifest is for {0!r}, not {1!r}'.format(manifest.get('subcommand'),
                                                                            subcommand))
        subcommand = manifest.get('subcommand')
        options.update(check_options(manifest.get('spec', {})))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    if subcommand not in COLUMNS:
        raise ValidationError('no subcommand given')
    return subcommand, options


def _model(options, p):
    if options['model'] == 'truncated':
        return {'kind': 'truncated', 'N': options['N'], 'p': p}
    return {'kind': 'continuum', 'p': p}


def _spec(options, event, params, p, **extra):
    return ExperimentSpec(options['dim'], event, params, _model(options, p), options['n'], options['seed'],
                          options['backend'], intensity=options['intensity'], **extra)


def _grid(options, specs, event, axes, params):
    '''
    One report per node of the product of the ``axes`` option grids;
    node ``i`` uses replica streams ``(seed, i, ...)``.  The resolved specs
    are appended to ``specs``.
    '''
    rows = []
    for node, values in enumerate(product(*[options[a] for a in axes])):
        point = dict(zip(axes, values))
        p = point.pop('p', options['p'][0])
        spec = _spec(options, event, params(point), p)
        specs.append(spec)
        report = mc_estimate(spec, node)
        rows.append([options['dim']] + list(values) + report_row(report))
    return rows


def run_crossing(options, specs):
    return _grid(options, specs, 'crossing', ('L', 'p'), lambda point: {'L': point['L']})


def run_uniqueness_curve(options, specs):
    return _grid(options, specs, 'uniqueness', ('L', 'p'), lambda point: {'L': point['L']})


def run_chemdist(options, specs):
    return _grid(options, specs, 'chemdist', ('R', 'M'), lambda point: dict(point))


def run_dense_cluster(options, specs):
    rows = _grid(options, specs, 'dense_cluster', ('L', 'p'),
                 lambda point: {'L': point['L'], 'ell': options['ell']})
    return [row[:2] + [options['ell']] + row[2:] for row in rows]


def run_origin_cluster(options, specs):
    return _grid(options, specs, 'origin_diameter', ('p', 'radii'),
                 lambda point: {'R': point['radii'], 'sample_budget': 0})


def run_estimate_pc(options, specs):
    rows = []
    defaults = {'master_seed': options['seed'], 'backend': options['backend'],
                'intensity': options['intensity']}
    for L in options['L']:
        result = estimate_pc(options['dim'], L, options['tol'], defaults, batch=options['n'])
        specs.append(result.spec)
        rows.append([options['dim'], L, result.estimate, result.lower, result.upper, len(result.steps),
                     result.capped, sum(step.report.n for step in result.steps)])
    return rows


def run_dominance(options, specs):
    rows = []
    p = options['p'][0]
    base = ExperimentSpec(options['dim'], 'crossing', {'L': options['L'][0]},
                          {'kind': 'truncated', 'N': options['N'], 'p': p}, options['n'], options['seed'],
                          'lattice', intensity=options['intensity'])
    for delta in options['delta']:
        for direction, (smaller, larger) in enumerate(sprinkling_pairs(base, options['eps'], delta)):
            specs.extend([smaller, larger])
            verdict = dominance_test(smaller, larger, options['alpha'])
            rows.append([options['dim'], options['N'], p, options['eps'], delta, direction, verdict.verdict,
                         verdict.report_a.estimate, verdict.report_b.estimate, verdict.statistic,
                         verdict.p_value, verdict.separated])
    return rows


def run_decay_fit(options, specs):
    p = options['p'][0]
    radii = options['radii']
    nodes = [_spec(options, 'origin_diameter', {'R': R, 'sample_budget': 0}, p) for R in radii]
    specs.extend(nodes)
    reports = [mc_estimate(spec, node) for node, spec in enumerate(nodes)]
    fit = decay_fit(radii, reports, options['form'], options['dim'])
    return [[options['dim'], p, R] + report_row(report) + list(fit) for R, report in zip(radii, reports)]


def run_selftest(options, specs):
    return [list(check) for check in oracles.selftest(options['seed'])]


RUNNERS = {
    'crossing': run_crossing,
    'uniqueness-curve': run_uniqueness_curve,
    'estimate-pc': run_estimate_pc,
    'chemdist': run_chemdist,
    'dense-cluster': run_dense_cluster,
    'origin-cluster': run_origin_cluster,
    'dominance': run_dominance,
    'decay-fit': run_decay_fit,
    'selftest': run_selftest,
}


def format_value(value):
    '''
    >>> format_value(0.1)
    '0.10000000000000001'
    >>> format_value(True), format_value(None), format_value(3)
    ('1', '', '3')
    '''
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return '1' if value else '0'
    if isinstance(value, (float, np.floating)):
        return '%.*g' % (FLOAT_DIGITS, value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def file_hash(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def spec_hash(subcommand, options):
    text = json.dumps({'subcommand': subcommand, 'spec': options}, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def run(subcommand, options, out='.'):
    '''
    Run one subcommand and write its CSV and manifest into ``out``.

    :returns: the manifest as a dict
    '''
    started = time.perf_counter()
    specs = []
    rows = RUNNERS[subcommand](options, specs)
    if not os.path.isdir(out):
        os.makedirs(out)
    csv_name = '{0}.csv'.format(subcommand)
    write_csv(os.path.join(out, csv_name), COLUMNS[subcommand], rows)
    manifest = {
        'schema_version': SCHEMA_VERSION,
        'tool_version': voroperc.__version__,
        'subcommand': subcommand,
        'spec': options,
        'spec_hash': spec_hash(subcommand, options),
        'experiments': [spec.to_dict() for spec in specs],
        'outputs': {csv_name: file_hash(os.path.join(out, csv_name))},
        'timings': {'wall_time': time.perf_counter() - started},
    }
    with open(os.path.join(out, '{0}.manifest.json'.format(subcommand)), 'w') as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
    logger.info('%s: %d rows written to %s', subcommand, len(rows), out)
    return manifest


def main(argv=None):
    '''
    Entry point; returns the exit code: 0 on success, 1 on validation
    errors, 2 when a budget is exhausted, 3 on internal failures.
    '''
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except VoroError as e:
        sys.stderr.write('voroperc: {0}\n'.format(e))
        return e.exit_code
    verbosity = getattr(args, 'verbose', 0)
    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10 * verbosity),
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        subcommand, options = resolve(args)
        run(subcommand, options, getattr(args, 'out', '.'))
    except VoroError as e:
        logger.error('%s', e)
        return e.exit_code
    except Exception:
        logger.exception('internal failure')
        return InvariantViolation.exit_code
    return 0
