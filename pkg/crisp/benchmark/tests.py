from __future__ import annotations

import csv
import io
from unittest import TestCase

from crisp.benchmark.pareto import (BUILD_TIME_FIELDS,
                                    dominates,
                                    min_build_time_table,
                                    pareto_front)
from crisp.benchmark.report import REPORT_FIELDS, evaluate_config, write_csv
from crisp.datasets.groundtruth import brute_force_knn
from crisp.datasets.synthetic import isotropic
from crisp.index.builder import build_index, index_logical_bytes
from crisp.search.config import SearchConfig, SearchMode


def _row(recall, qps, build_seconds=1.0, **kwargs):
    row = {
        'recall_at_k': recall,
        'qps': qps,
        'build_seconds': build_seconds,
        'm': 4,
        'tau_cev': 0.85,
        'mode': 'optimized',
        'budget_ratio': 0.1,
        'min_collision_ratio': 0.2,
    }
    row.update(kwargs)

    return row


class ParetoTests(TestCase):
    """Unit tests for Pareto front and build-time summaries."""

    def test_dominates(self):
        """Testing dominates"""
        self.assertTrue(dominates(_row(0.9, 100), _row(0.8, 100)))
        self.assertTrue(dominates(_row(0.9, 100), _row(0.9, 50)))
        self.assertFalse(dominates(_row(0.9, 100), _row(0.9, 100)))
        self.assertFalse(dominates(_row(0.9, 50), _row(0.8, 100)))

    def test_pareto_front(self):
        """Testing pareto_front drops dominated rows"""
        rows = [
            _row(0.80, 500),
            _row(0.90, 300),
            _row(0.85, 200),
            _row(0.99, 100),
            _row(0.70, 400),
        ]

        front = pareto_front(rows)

        self.assertEqual([(row['recall_at_k'], row['qps']) for row in front],
                         [(0.80, 500), (0.90, 300), (0.99, 100)])

    def test_pareto_front_keeps_ties(self):
        """Testing pareto_front keeps identical points"""
        rows = [_row(0.9, 100, m=4), _row(0.9, 100, m=8)]

        self.assertEqual([row['m'] for row in pareto_front(rows)], [4, 8])

    def test_pareto_front_empty(self):
        """Testing pareto_front with no rows"""
        self.assertEqual(pareto_front([]), [])

    def test_min_build_time_table(self):
        """Testing min_build_time_table picks the fastest qualifying build"""
        rows = [
            _row(0.82, 100, build_seconds=5.0, m=8),
            _row(0.91, 100, build_seconds=9.0, m=16),
            _row(0.86, 100, build_seconds=3.0, m=4),
            _row(0.96, 100, build_seconds=None, m=32),
        ]

        table = min_build_time_table(rows)

        self.assertEqual(
            [(entry['recall_threshold'], entry['m'], entry['build_seconds'])
             for entry in table],
            [(0.80, 4, 3.0), (0.85, 4, 3.0), (0.90, 16, 9.0)])
        self.assertEqual(set(table[0]), set(BUILD_TIME_FIELDS))

    def test_min_build_time_ties(self):
        """Testing min_build_time_table prefers the earlier row on ties"""
        rows = [
            _row(0.95, 100, build_seconds=2.0, m=4),
            _row(0.95, 100, build_seconds=2.0, m=8),
        ]

        table = min_build_time_table(rows, thresholds=[0.9])

        self.assertEqual(len(table), 1)
        self.assertEqual(table[0]['m'], 4)


class ReportTests(TestCase):
    """Unit tests for benchmark reports."""

    def test_write_csv(self):
        """Testing write_csv formatting"""
        fp = io.StringIO()

        count = write_csv(
            [
                {'a': 1, 'b': None, 'c': True, 'd': 0.1},
                {'a': 2, 'b': 'x', 'c': False, 'd': 2.0, 'extra': 1},
            ],
            fp, ['a', 'b', 'c', 'd'])

        self.assertEqual(count, 2)
        self.assertEqual(fp.getvalue(),
                         'a,b,c,d\n'
                         '1,,1,0.1\n'
                         '2,x,0,2.0\n')

    def test_write_csv_empty(self):
        """Testing write_csv with no rows writes the header"""
        fp = io.StringIO()

        self.assertEqual(write_csv([], fp, ['a', 'b']), 0)
        self.assertEqual(fp.getvalue(), 'a,b\n')

    def test_evaluate_config(self):
        """Testing evaluate_config with a full-coverage configuration"""
        data = isotropic(300, 16, seed=2)
        queries = isotropic(8, 16, seed=3)
        gt = brute_force_knn(data, queries, 5)
        index = build_index(data, 2, 1, copy=True)
        config = SearchConfig(k=5, budget_ratio=1.0, min_collision_ratio=0.5,
                              mode=SearchMode.GUARANTEED)

        report = evaluate_config(index, queries, gt, config,
                                 build_seconds=1.5, tau_cev=0.85, seed=0)

        self.assertEqual(set(report), set(REPORT_FIELDS))
        self.assertEqual(report['recall_at_k'], 1.0)
        self.assertEqual(report['mode'], 'guaranteed')
        self.assertEqual(report['m'], 2)
        self.assertEqual(report['centroids'], 1)
        self.assertEqual(report['mean_candidates'], 300.0)
        self.assertEqual(report['verified_fraction'], 1.0)
        self.assertEqual(report['logical_bytes'], index_logical_bytes(index))
        self.assertFalse(report['parallel'])
        self.assertGreater(report['qps'], 0)

        fp = io.StringIO()
        write_csv([report], fp, REPORT_FIELDS)
        fp.seek(0)
        parsed = list(csv.DictReader(fp))

        self.assertEqual(parsed[0]['build_seconds'], '1.5')
        self.assertEqual(parsed[0]['parallel'], '0')
        self.assertEqual(parsed[0]['recall_at_k'], '1.0')
