import argparse
import csv
import json
import os
import shutil
import tempfile

from voroperc import cli
from voroperc.cli import (COLUMNS, DEFAULTS, build_parser, check_options, floats, format_value, main,
                          resolve)
from voroperc.estimators import ExperimentSpec
from voroperc.exceptions import BudgetExceeded, ValidationError

FORMAT_TESTS = [
    (0.1, '0.10000000000000001'),
    (0.5, '0.5'),
    (1.0, '1'),
    (2, '2'),
    (True, '1'),
    (False, '0'),
    (None, ''),
    ('consistent', 'consistent'),
]


class SerialRuns(object):
    """Context setting ``VORO_THREADS=1`` and a scratch directory."""

    def __enter__(self):
        self.saved = os.environ.get('VORO_THREADS')
        os.environ['VORO_THREADS'] = '1'
        self.tmp = tempfile.mkdtemp()
        return self.tmp

    def __exit__(self, *exc):
        shutil.rmtree(self.tmp)
        if self.saved is None:
            del os.environ['VORO_THREADS']
        else:
            os.environ['VORO_THREADS'] = self.saved


def check_format(value, expected):
    assert format_value(value) == expected, value


def test_format_value():
    for case in FORMAT_TESTS:
        check_format(*case)


def test_floats():
    assert floats('1,2.5') == [1.0, 2.5]
    assert floats('3') == [3.0]
    try:
        floats('1,two')
    except argparse.ArgumentTypeError:
        pass
    else:
        raise AssertionError('parsed a bad list')


def test_every_subcommand_has_a_parser():
    parser = build_parser()
    for name in COLUMNS:
        args = parser.parse_args([name, '--n', '5'])
        assert resolve(args) == (name, dict(DEFAULTS, n=5))


def test_option_precedence():
    with SerialRuns() as tmp:
        path = os.path.join(tmp, 'options.json')
        with open(path, 'w') as handle:
            json.dump({'n': 3, 'seed': 9, 'p': 0.25}, handle)
        args = build_parser().parse_args(['crossing', '--config', path, '--n', '5'])
        subcommand, options = resolve(args)
        assert subcommand == 'crossing'
        assert options['n'] == 5 and options['seed'] == 9 and options['p'] == [0.25]


def test_check_options():
    assert check_options({'L': 4.0, 'ell': 1.0}) == {'L': [4.0], 'ell': 1.0}
    try:
        check_options({'colour': 'red'})
    except ValidationError:
        pass
    else:
        raise AssertionError('accepted an unknown option')


def test_usage_errors():
    with SerialRuns() as tmp:
        assert main([]) == 1
        assert main(['crossing', '--p', 'half']) == 1
        assert main(['crossing', '--dim', '7', '--out', tmp]) == 1
        assert main(['crossing', '--config', os.path.join(tmp, 'missing.json')]) == 1
        assert not os.path.exists(os.path.join(tmp, 'crossing.csv'))


def read_rows(path):
    with open(path) as handle:
        return list(csv.reader(handle))


def test_crossing_run_and_rerun():
    with SerialRuns() as tmp:
        first, second = os.path.join(tmp, 'first'), os.path.join(tmp, 'second')
        assert main(['crossing', '--L', '1', '--p', '0,1', '--n', '3', '--out', first]) == 0
        rows = read_rows(os.path.join(first, 'crossing.csv'))
        assert rows[0] == COLUMNS['crossing']
        assert [row[2] for row in rows[1:]] == ['0', '1']
        assert [row[4] for row in rows[1:]] == ['0', '3']
        assert rows[2][-1] == ''

        manifest_path = os.path.join(first, 'crossing.manifest.json')
        with open(manifest_path) as handle:
            manifest = json.load(handle)
        assert manifest['subcommand'] == 'crossing'
        assert manifest['spec']['n'] == 3
        experiments = manifest['experiments']
        assert [e['model']['p'] for e in experiments] == [0.0, 1.0]
        assert all(e['event'] == 'crossing' and e['params'] == {'L': 1.0} and e['n'] == 3 for e in experiments)
        assert [ExperimentSpec.from_dict(e).to_dict() for e in experiments] == experiments

        assert main(['--manifest', manifest_path, '--out', second]) == 0
        with open(os.path.join(first, 'crossing.csv'), 'rb') as a, \
                open(os.path.join(second, 'crossing.csv'), 'rb') as b:
            assert a.read() == b.read()
        with open(os.path.join(second, 'crossing.manifest.json')) as handle:
            again = json.load(handle)
        assert again['spec_hash'] == manifest['spec_hash']
        assert again['outputs'] == manifest['outputs']
        assert again['experiments'] == experiments

        assert main(['chemdist', '--manifest', manifest_path, '--out', second]) == 1


def test_failure_exit_codes():
    saved = cli.RUNNERS['crossing']

    def broken(options, specs):
        raise KeyError('lost')

    def exhausted(options, specs):
        raise BudgetExceeded('too many points')
    with SerialRuns() as tmp:
        try:
            cli.RUNNERS['crossing'] = broken
            assert main(['crossing', '--n', '1', '--out', tmp]) == 3
            cli.RUNNERS['crossing'] = exhausted
            assert main(['crossing', '--n', '1', '--out', tmp]) == 2
        finally:
            cli.RUNNERS['crossing'] = saved
        assert not os.path.exists(os.path.join(tmp, 'crossing.manifest.json'))
