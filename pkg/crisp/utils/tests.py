from __future__ import annotations

import io
import json
import logging
import os
import shutil
import tempfile
from unittest import TestCase

import numpy as np

from crisp.errors import InvalidArgumentError
from crisp.utils.config import (as_list,
                                load_config_file,
                                merge_options,
                                normalize_key)
from crisp.utils.console import ensure_parent_dir, print_status
from crisp.utils.log import init_logging


class ConfigTests(TestCase):
    """Unit tests for crisp.utils.config."""

    def setUp(self):
        super().setUp()

        self.tempdir = tempfile.mkdtemp(prefix='crisp-tests')

    def tearDown(self):
        shutil.rmtree(self.tempdir)

        super().tearDown()

    def _write(self, name, content):
        path = os.path.join(self.tempdir, name)

        with open(path, 'w') as fp:
            fp.write(content)

        return path

    def test_normalize_key(self):
        """Testing normalize_key"""
        self.assertEqual(normalize_key('budget-ratio'), 'budget_ratio')
        self.assertEqual(normalize_key(' budget_ratio '), 'budget_ratio')

    def test_merge_options(self):
        """Testing merge_options precedence"""
        merged = merge_options(
            options={'k': 10, 'eps0': None, 'mode': None},
            file_config={'k': 50, 'eps0': 1.5, 'tau-cev': 0.9},
            defaults={'k': 100, 'eps0': 2.1, 'mode': 'optimized'})

        self.assertEqual(merged, {
            'k': 10,
            'eps0': 1.5,
            'mode': 'optimized',
            'tau_cev': 0.9,
        })

    def test_as_list(self):
        """Testing as_list with strings, lists, and scalars"""
        self.assertEqual(as_list('0.1, 0.2,,0.5', float), [0.1, 0.2, 0.5])
        self.assertEqual(as_list([4, '8'], int), [4, 8])
        self.assertEqual(as_list(16, int), [16])
        self.assertEqual(as_list(None, int), [])

        with self.assertRaises(InvalidArgumentError):
            as_list('4,eight', int)

    def test_load_yaml(self):
        """Testing load_config_file with YAML"""
        path = self._write('config.yaml', 'budget-ratio: 0.1\nk: 10\n')

        self.assertEqual(load_config_file(path),
                         {'budget_ratio': 0.1, 'k': 10})

    def test_load_json(self):
        """Testing load_config_file with JSON"""
        path = self._write('config.json', '{"min-collision-ratio": 0.25}')

        self.assertEqual(load_config_file(path),
                         {'min_collision_ratio': 0.25})

    def test_load_empty(self):
        """Testing load_config_file with an empty file"""
        self.assertEqual(load_config_file(self._write('empty.yaml', '')), {})

    def test_load_invalid(self):
        """Testing load_config_file with bad contents"""
        with self.assertRaises(InvalidArgumentError):
            load_config_file(self._write('list.yaml', '- a\n- b\n'))

        with self.assertRaises(InvalidArgumentError):
            load_config_file(self._write('broken.yaml', 'k: [1, 2\n'))

        with self.assertRaises(OSError):
            load_config_file(os.path.join(self.tempdir, 'missing.yaml'))

    def test_ensure_parent_dir(self):
        """Testing ensure_parent_dir creates nested directories"""
        path = os.path.join(self.tempdir, 'a', 'b', 'out.csv')

        ensure_parent_dir(path)
        ensure_parent_dir(path)
        ensure_parent_dir('relative.csv')

        self.assertTrue(os.path.isdir(os.path.dirname(path)))


class ConsoleTests(TestCase):
    """Unit tests for status and log output."""

    def test_print_status(self):
        """Testing print_status writes sorted JSON"""
        fp = io.StringIO()

        print_status({
            'qps': float('inf'),
            'command': 'search',
            'recall_at_k': np.float64(0.5),
            'parallel': np.bool_(False),
        }, fp)

        line = fp.getvalue()

        self.assertTrue(line.endswith('\n'))
        self.assertEqual(line.count('\n'), 1)
        self.assertEqual(list(json.loads(line)),
                         ['command', 'parallel', 'qps', 'recall_at_k'])
        self.assertEqual(json.loads(line), {
            'command': 'search',
            'parallel': False,
            'qps': None,
            'recall_at_k': 0.5,
        })

    def test_init_logging(self):
        """Testing init_logging replaces its own handlers"""
        root = logging.getLogger()
        old_handlers = list(root.handlers)
        old_level = root.level

        try:
            init_logging()
            init_logging(debug=True)

            ours = [
                handler
                for handler in root.handlers
                if getattr(handler, '_crisp_handler', False)
            ]

            self.assertEqual(len(ours), 3)
            self.assertEqual(root.level, logging.DEBUG)

            init_logging()

            ours = [
                handler
                for handler in root.handlers
                if getattr(handler, '_crisp_handler', False)
            ]

            self.assertEqual(len(ours), 2)
            self.assertEqual(root.level, logging.INFO)
        finally:
            for handler in list(root.handlers):
                if handler not in old_handlers:
                    root.removeHandler(handler)

            root.setLevel(old_level)
