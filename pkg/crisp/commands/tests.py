from __future__ import annotations

import csv
import io
import json
import os
import shutil
import struct
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from unittest import TestCase

import numpy as np

from crisp.commands import (EXIT_ARGUMENT_ERROR,
                            EXIT_IO_ERROR,
                            EXIT_OK,
                            main as dispatch,
                            run_command)
from crisp.commands.build import BuildIndex
from crisp.commands.generate import GenerateDataset
from crisp.commands.groundtruth import ComputeGroundTruth
from crisp.commands.search import SearchIndex
from crisp.commands.sweep import SweepConfigs
from crisp.commands.theory import (MEASURED_THEORY_FIELDS,
                                   THEORY_FIELDS,
                                   TheoryReport)
from crisp.benchmark.report import REPORT_FIELDS
from crisp.datasets.io import load_fvecs, load_ivecs
from crisp.index.storage import load_index
from crisp.utils.config import merge_options


def _run(cmd_class, argv):
    stdout = io.StringIO()
    stderr = io.StringIO()

    with redirect_stdout(stdout), redirect_stderr(stderr):
        status = run_command(cmd_class, argv)

    return status, stdout.getvalue(), stderr.getvalue()


def _last_status(stdout):
    return json.loads(stdout.strip().splitlines()[-1])


def _read_csv(path):
    with open(path, 'r', newline='') as fp:
        return list(csv.DictReader(fp))


def _read_bytes(path):
    with open(path, 'rb') as fp:
        return fp.read()


class CommandTests(TestCase):
    """Unit tests for the crisp commands."""

    def setUp(self):
        super().setUp()

        self.tempdir = tempfile.mkdtemp(prefix='crisp-tests')
        self.base = self._path('base.fvecs')
        self.queries = self._path('queries.fvecs')
        self.gt = self._path('gt.ivecs')

    def tearDown(self):
        shutil.rmtree(self.tempdir)

        super().tearDown()

    def _path(self, name):
        return os.path.join(self.tempdir, name)

    def _generate(self, size=400, dim=16):
        status, _stdout, stderr = _run(GenerateDataset, [
            '--kind', 'clustered',
            '--size', str(size),
            '--num-queries', '10',
            '--dim', str(dim),
            '--seed', '3',
            '--base-out', self.base,
            '--queries-out', self.queries,
        ])
        self.assertEqual(status, EXIT_OK, stderr)

        status, _stdout, stderr = _run(ComputeGroundTruth, [
            '--dataset', self.base,
            '--queries', self.queries,
            '--k', '10',
            '--out', self.gt,
        ])
        self.assertEqual(status, EXIT_OK, stderr)

    def _build(self, out, *extra):
        return _run(BuildIndex, [
            '--dataset', self.base,
            '--subspaces', '2',
            '--centroids', '4',
            '--kmeans-iters', '5',
            '--out', out,
        ] + list(extra))

    def test_generate(self):
        """Testing GenerateDataset writes base and query files"""
        status, stdout, _stderr = _run(GenerateDataset, [
            '--size', '50',
            '--num-queries', '5',
            '--dim', '6',
            '--base-out', self.base,
            '--queries-out', self._path('sub/queries.fvecs'),
        ])

        self.assertEqual(status, EXIT_OK)
        self.assertEqual(load_fvecs(self.base).data.shape, (50, 6))
        self.assertEqual(
            load_fvecs(self._path('sub/queries.fvecs')).data.shape,
            (5, 6))

        payload = _last_status(stdout)
        self.assertEqual(payload['command'], 'generate')
        self.assertEqual(payload['kind'], 'isotropic')
        self.assertEqual(payload['n'], 50)

    def test_groundtruth(self):
        """Testing ComputeGroundTruth writes an ivecs file"""
        self._generate()

        gt = load_ivecs(self.gt)

        self.assertEqual(gt.ids.shape, (10, 10))
        gt.validate(400)

    def test_build_and_search(self):
        """Testing BuildIndex and SearchIndex end to end"""
        self._generate()
        index_path = self._path('index.crisp')

        status, stdout, stderr = self._build(index_path)

        self.assertEqual(status, EXIT_OK, stderr)

        payload = _last_status(stdout)
        self.assertEqual(payload['command'], 'build')
        self.assertEqual(payload['n'], 400)
        self.assertEqual(payload['m'], 2)
        self.assertEqual(payload['k'], 4)
        self.assertEqual(payload['seed'], 0)
        self.assertEqual(payload['logical_bytes'],
                         os.path.getsize(index_path) - 53)
        self.assertIn('✓', stderr)

        results_path = self._path('results.ivecs')
        status, stdout, stderr = _run(SearchIndex, [
            '--index', index_path,
            '--queries', self.queries,
            '--gt', self.gt,
            '--mode', 'guaranteed',
            '--budget-ratio', '1.0',
            '--min-collision-ratio', '0.5',
            '--k', '10',
            '--out', results_path,
        ])

        self.assertEqual(status, EXIT_OK, stderr)

        payload = _last_status(stdout)
        self.assertEqual(payload['command'], 'search')
        self.assertEqual(payload['mode'], 'guaranteed')
        self.assertEqual(payload['queries'], 10)
        self.assertEqual(payload['mean_candidates'], 400.0)
        self.assertFalse(payload['parallel'])
        self.assertGreaterEqual(payload['recall_at_k'], 0.99)
        self.assertEqual(load_ivecs(results_path).ids.shape, (10, 10))

    def test_deterministic(self):
        """Testing BuildIndex and SearchIndex are byte-for-byte
        deterministic
        """
        self._generate()
        outputs = []

        for run in range(2):
            index_path = self._path('index-%d.crisp' % run)
            results_path = self._path('results-%d.ivecs' % run)

            status, _stdout, stderr = self._build(index_path, '--seed', '7')
            self.assertEqual(status, EXIT_OK, stderr)

            status, _stdout, stderr = _run(SearchIndex, [
                '--index', index_path,
                '--queries', self.queries,
                '--budget-ratio', '0.2',
                '--min-collision-ratio', '0.5',
                '--k', '5',
                '--out', results_path,
            ])
            self.assertEqual(status, EXIT_OK, stderr)

            outputs.append((_read_bytes(index_path),
                            _read_bytes(results_path)))

        self.assertEqual(outputs[0], outputs[1])

    def test_config_file(self):
        """Testing command line options override the configuration file"""
        self._generate()
        config_path = self._path('build.yaml')

        with open(config_path, 'w') as fp:
            fp.write('subspaces: 2\n'
                     'centroids: 3\n'
                     'kmeans-iters: 3\n'
                     'seed: 9\n')

        status, stdout, stderr = _run(BuildIndex, [
            '--config', config_path,
            '--dataset', self.base,
            '--subspaces', '4',
            '--out', self._path('index.crisp'),
        ])

        self.assertEqual(status, EXIT_OK, stderr)

        payload = _last_status(stdout)
        self.assertEqual(payload['m'], 4)
        self.assertEqual(payload['k'], 3)
        self.assertEqual(payload['seed'], 9)

    def test_config_file_not_mapping(self):
        """Testing a configuration file that isn't a mapping"""
        config_path = self._path('bad.yaml')

        with open(config_path, 'w') as fp:
            fp.write('- 1\n- 2\n')

        status, _stdout, _stderr = _run(BuildIndex, ['--config', config_path])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)

    def test_missing_required(self):
        """Testing a missing required option"""
        status, stdout, stderr = _run(BuildIndex, [
            '--dataset', self.base,
            '--subspaces', '2',
        ])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)
        self.assertEqual(stdout, '')
        self.assertIn('Missing required option --out', stderr)
        self.assertIn('✗', stderr)

    def test_invalid_argument(self):
        """Testing an invalid option value"""
        self._generate()

        status, _stdout, _stderr = _run(BuildIndex, [
            '--dataset', self.base,
            '--subspaces', '0',
            '--out', self._path('index.crisp'),
        ])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)

    def test_unknown_flag(self):
        """Testing an unknown command line flag"""
        stderr = io.StringIO()

        with redirect_stderr(stderr):
            with self.assertRaises(SystemExit) as cm:
                run_command(BuildIndex, ['--bogus'])

        self.assertEqual(cm.exception.code, EXIT_ARGUMENT_ERROR)

    def test_missing_file(self):
        """Testing a missing input file"""
        status, _stdout, stderr = _run(BuildIndex, [
            '--dataset', self._path('missing.fvecs'),
            '--subspaces', '2',
            '--out', self._path('index.crisp'),
        ])

        self.assertEqual(status, EXIT_IO_ERROR)
        self.assertIn('missing.fvecs', stderr)

    def test_corrupt_index(self):
        """Testing SearchIndex with a corrupt index file"""
        self._generate()
        index_path = self._path('index.crisp')

        with open(index_path, 'wb') as fp:
            fp.write(b'not an index at all')

        status, _stdout, _stderr = _run(SearchIndex, [
            '--index', index_path,
            '--queries', self.queries,
            '--budget-ratio', '0.1',
            '--min-collision-ratio', '0.5',
            '--out', self._path('results.ivecs'),
        ])

        self.assertEqual(status, EXIT_IO_ERROR)

    def test_non_finite_dataset(self):
        """Testing BuildIndex with NaN in the dataset file"""
        with open(self.base, 'wb') as fp:
            fp.write(struct.pack('<iff', 2, float('nan'), 1.0))
            fp.write(struct.pack('<iff', 2, 2.0, 3.0))

        status, _stdout, stderr = self._build(self._path('index.crisp'))

        self.assertEqual(status, EXIT_IO_ERROR)
        self.assertIn(self.base, stderr)

    def test_sweep_index(self):
        """Testing SweepConfigs over a saved index"""
        self._generate()
        index_path = self._path('index.crisp')
        self._build(index_path)
        out = self._path('sweep/results.csv')

        status, stdout, stderr = _run(SweepConfigs, [
            '--index', index_path,
            '--queries', self.queries,
            '--gt', self.gt,
            '--modes', 'guaranteed',
            '--budget-ratios', '0.05,0.2,1.0',
            '--min-collision-ratios', '0.25,0.5,1.0',
            '--k', '10',
            '--out', out,
        ])

        self.assertEqual(status, EXIT_OK, stderr)

        rows = _read_csv(out)
        self.assertEqual(len(rows), 9)
        self.assertEqual(list(rows[0]), list(REPORT_FIELDS))
        self.assertTrue(all(row['build_seconds'] == '' for row in rows))
        self.assertTrue(all(row['mode'] == 'guaranteed' for row in rows))

        payload = _last_status(stdout)
        self.assertEqual(payload['rows'], 9)
        self.assertEqual(len(_read_csv(payload['pareto_out'])),
                         payload['pareto_rows'])
        self.assertTrue(os.path.exists(self._path(
            'sweep/results.build_time.csv')))
        self.assertEqual(payload['build_time_rows'], 0)

    def test_sweep_dataset(self):
        """Testing SweepConfigs rebuilding from a dataset"""
        self._generate()
        out = self._path('results.csv')

        status, stdout, stderr = _run(SweepConfigs, [
            '--dataset', self.base,
            '--queries', self.queries,
            '--gt', self.gt,
            '--subspaces', '2,4',
            '--centroids', '4',
            '--kmeans-iters', '3',
            '--budget-ratios', '1.0',
            '--min-collision-ratios', '0.5',
            '--k', '10',
            '--out', out,
        ])

        self.assertEqual(status, EXIT_OK, stderr)

        rows = _read_csv(out)
        self.assertEqual(len(rows), 4)
        self.assertEqual(sorted({row['m'] for row in rows}), ['2', '4'])
        self.assertEqual(sorted({row['mode'] for row in rows}),
                         ['guaranteed', 'optimized'])
        self.assertTrue(all(float(row['build_seconds']) > 0 for row in rows))
        self.assertGreater(_last_status(stdout)['build_time_rows'], 0)

    def test_sweep_builds_lazily(self):
        """Testing SweepConfigs builds each index only when it's reached"""
        self._generate()
        command = SweepConfigs()
        options = command.setup_options().parse_args([
            '--dataset', self.base,
            '--subspaces', '2,4',
            '--centroids', '4',
            '--kmeans-iters', '3',
        ])
        command.config = merge_options(
            options={
                key: value
                for key, value in vars(options).items()
                if key not in ('config', 'debug')
            },
            defaults=SweepConfigs.DEFAULTS)

        indexes = command.iter_indexes()

        with self.assertLogs('crisp.index.builder', 'INFO') as cm:
            index, build_values = next(indexes)

        self.assertEqual(index.m, 2)
        self.assertGreater(build_values['build_seconds'], 0)
        self.assertEqual(
            sum(record.getMessage().startswith('Built index')
                for record in cm.records),
            1)

        with self.assertLogs('crisp.index.builder', 'INFO'):
            index, _build_values = next(indexes)

        self.assertEqual(index.m, 4)

        with self.assertRaises(StopIteration):
            next(indexes)

    def test_sweep_conflicting_sources(self):
        """Testing SweepConfigs with --subspaces but no dataset"""
        self._generate()
        index_path = self._path('index.crisp')
        self._build(index_path)

        status, _stdout, stderr = _run(SweepConfigs, [
            '--index', index_path,
            '--queries', self.queries,
            '--gt', self.gt,
            '--subspaces', '4',
            '--budget-ratios', '0.1',
            '--min-collision-ratios', '0.5',
            '--k', '10',
            '--out', self._path('results.csv'),
        ])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)
        self.assertIn('--dataset', stderr)

    def test_sweep_empty_grid(self):
        """Testing SweepConfigs with no budget ratios"""
        status, _stdout, _stderr = _run(SweepConfigs, [
            '--index', self._path('index.crisp'),
            '--min-collision-ratios', '0.5',
            '--out', self._path('results.csv'),
        ])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)

    def test_theory_stdout(self):
        """Testing TheoryReport writing CSV to standard output"""
        status, stdout, stderr = _run(TheoryReport, [
            '--m', '16',
            '--p-star', '0.5',
            '--tau', '4,8',
            '--trials', '1000',
        ])

        self.assertEqual(status, EXIT_OK, stderr)

        rows = list(csv.DictReader(io.StringIO(stdout)))
        self.assertEqual(len(rows), 2)
        self.assertEqual(list(rows[0]), list(THEORY_FIELDS))
        self.assertAlmostEqual(float(rows[0]['hoeffding_bound']),
                               1 - np.exp(-2), delta=1e-9)
        self.assertAlmostEqual(float(rows[0]['exact_failure']),
                               697 / 65536, delta=1e-15)
        self.assertEqual(rows[1]['hoeffding_bound'], '')

    def test_theory_out(self):
        """Testing TheoryReport writing to a file with a config file"""
        config_path = self._path('theory.json')
        out = self._path('theory.csv')

        with open(config_path, 'w') as fp:
            json.dump({'m': [4, 8], 'p-star': [0.3, 0.8], 'tau': [1],
                       'trials': 500}, fp)

        status, stdout, stderr = _run(TheoryReport, [
            '--config', config_path,
            '--out', out,
        ])

        self.assertEqual(status, EXIT_OK, stderr)
        self.assertEqual(len(_read_csv(out)), 4)

        payload = _last_status(stdout)
        self.assertEqual(payload['rows'], 4)
        self.assertEqual(payload['vacuous'], 0)

    def test_theory_measured(self):
        """Testing TheoryReport measuring p* on a saved index"""
        self._generate()
        index_path = self._path('index.crisp')
        self._build(index_path)
        out = self._path('theory.csv')

        status, stdout, stderr = _run(TheoryReport, [
            '--index', index_path,
            '--queries', self.queries,
            '--gt', self.gt,
            '--budget-ratio', '0.25',
            '--tau', '1,2,3',
            '--trials', '500',
            '--out', out,
        ])

        self.assertEqual(status, EXIT_OK, stderr)

        rows = _read_csv(out)
        self.assertEqual(len(rows), 3)
        self.assertEqual(list(rows[0]), list(MEASURED_THEORY_FIELDS))
        self.assertEqual({row['m'] for row in rows}, {'2'})
        self.assertEqual(rows[2]['measured_failure'], '1.0')
        self.assertTrue(all(0.0 <= float(row['measured_failure']) <= 1.0
                            for row in rows))

        payload = _last_status(stdout)
        self.assertEqual(payload['index'], index_path)
        self.assertEqual(payload['m'], 2)
        self.assertAlmostEqual(payload['p_star'], float(rows[0]['p_star']))

    def test_theory_measured_conflicts(self):
        """Testing TheoryReport with --index and --m together"""
        status, _stdout, stderr = _run(TheoryReport, [
            '--index', self._path('index.crisp'),
            '--m', '4',
            '--tau', '1',
        ])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)
        self.assertIn('--index', stderr)

    def test_theory_missing_values(self):
        """Testing TheoryReport without thresholds"""
        status, _stdout, stderr = _run(TheoryReport, [
            '--m', '16',
            '--p-star', '0.5',
        ])

        self.assertEqual(status, EXIT_ARGUMENT_ERROR)
        self.assertIn('--tau', stderr)

    def test_index_loads(self):
        """Testing the built index file loads"""
        self._generate()
        index_path = self._path('index.crisp')
        self._build(index_path, '--rotation', 'always')

        index = load_index(index_path)

        self.assertTrue(index.rotation.applied)
        self.assertEqual(index.n, 400)


class DispatcherTests(TestCase):
    """Unit tests for the crisp dispatcher."""

    def _dispatch(self, argv):
        stdout = io.StringIO()
        stderr = io.StringIO()

        with redirect_stdout(stdout), redirect_stderr(stderr):
            with self.assertRaises(SystemExit) as cm:
                dispatch(argv)

        return cm.exception.code, stdout.getvalue(), stderr.getvalue()

    def test_subcommand(self):
        """Testing the dispatcher runs a subcommand"""
        code, stdout, _stderr = self._dispatch([
            'theory', '--m', '4', '--p-star', '0.5', '--tau', '1',
            '--trials', '100',
        ])

        self.assertEqual(code, EXIT_OK)
        self.assertTrue(stdout.startswith(','.join(THEORY_FIELDS)))

    def test_unknown(self):
        """Testing the dispatcher with an unknown subcommand"""
        code, _stdout, stderr = self._dispatch(['frobnicate'])

        self.assertEqual(code, EXIT_ARGUMENT_ERROR)
        self.assertIn('frobnicate', stderr)

    def test_no_arguments(self):
        """Testing the dispatcher with no subcommand"""
        code, stdout, _stderr = self._dispatch([])

        self.assertEqual(code, EXIT_ARGUMENT_ERROR)
        self.assertIn('usage: crisp', stdout)
