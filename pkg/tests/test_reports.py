"""Unit tests for report tables and writers"""
import json
import tempfile
import unittest
from enum import Enum
from pathlib import Path
import numpy as np
import pandas as pd
from src.core.exceptions import DataValidationError, ReportWriteError
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.estimation.fitter import FitResult
from src.reporting.reports import (ESTIMATE_COLUMNS, EstimateTable, ReportBundle, build_estimate_table,
                                   emit_reports, fit_bundle, group_means_bundle, load_rater_parameters)
from src.reporting.writers import ensure_directory, to_jsonable, write_json, write_table
from src.simulation.designs import complete_design, standard_normal_sample
from src.simulation.generator import simulate_dataset


class Colour(Enum):
    RED = 'red'


class TestWriters(unittest.TestCase):
    """Test cases for the atomic writers"""

    def setUp(self):
        """Set up a temporary directory"""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        """Remove the temporary directory"""
        self.tmp.cleanup()

    def test_to_jsonable(self):
        """Test numpy, pandas, enum and non-finite values"""
        document = to_jsonable({'a': np.float64(np.nan), 'b': np.int32(3), 'c': np.array([1.0, np.inf]),
                                'd': Colour.RED, 'e': pd.DataFrame({'x': [1]}), 'f': np.bool_(True)})
        self.assertEqual(document, {'a': None, 'b': 3, 'c': [1.0, None], 'd': 'red', 'e': [{'x': 1}],
                                    'f': True})

    def test_json_reproducible(self):
        """Test rewriting the same document gives identical bytes"""
        path = self.root / 'summary.json'
        write_json({'z': 1.5, 'a': [np.nan, 2]}, path)
        first = path.read_bytes()
        write_json({'z': 1.5, 'a': [np.nan, 2]}, path)
        self.assertEqual(first, path.read_bytes())
        self.assertEqual(json.loads(first), {'a': [None, 2], 'z': 1.5})

    def test_table_no_leftovers(self):
        """Test a written table leaves no temporary file behind"""
        path = write_table(pd.DataFrame({'rater': ['A'], 'kappa_bar': [0.123456789012]}), self.root / 'out' / 't.csv')
        self.assertEqual(sorted(p.name for p in path.parent.iterdir()), ['t.csv'])
        self.assertEqual(path.read_text(), 'rater,kappa_bar\nA,0.123456789\n')

    def test_unwritable_directory(self):
        """Test a directory below a regular file cannot be created"""
        blocker = self.root / 'file'
        blocker.write_text('x')
        with self.assertRaises(ReportWriteError) as ctx:
            ensure_directory(blocker / 'sub')
        self.assertIn('sub', ctx.exception.path)

    def test_failed_write_removes_temporary(self):
        """Test an error inside the write leaves the directory clean"""
        class Broken(pd.DataFrame):
            def to_csv(self, *args, **kwargs):
                raise RuntimeError('boom')

        with self.assertRaises(RuntimeError):
            write_table(Broken({'a': [1]}), self.root / 'broken.csv')
        self.assertEqual(list(self.root.iterdir()), [])


class TestEstimateTables(unittest.TestCase):
    """Test cases for estimate tables and report bundles"""

    @classmethod
    def setUpClass(cls):
        """Build a fit result from known parameters"""
        params = ParameterSet(theta_prime=standard_normal_sample(30, seed=3), sigma=1.2, rho=[1.0, 0.6, 0.8],
                              eta=[-0.3, 0.1, 0.2], delta=[-0.5, 0.5], alpha=0.1)
        cls.data = simulate_dataset(params, complete_design('report', params, seed=1))
        cls.result = FitResult(spec=ModelSpec.default(ModelFamily.GMF), params=params, laplace_loglik=-100.0,
                               iterations=4, converged=True, student_ids=cls.data.student_ids,
                               rater_ids=cls.data.rater_ids, item_ids=cls.data.item_ids)
        cls.table = build_estimate_table(cls.result, cls.data, 'family', np.linspace(-3.0, 3.0, 7))

    def setUp(self):
        """Set up a temporary directory"""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        """Remove the temporary directory"""
        self.tmp.cleanup()

    def test_estimate_table(self):
        """Test counts, parameters and missing standard errors"""
        raters = self.table.raters
        self.assertEqual(list(raters.columns), ESTIMATE_COLUMNS)
        self.assertEqual(list(raters['n_ratings']), [60, 60, 60])
        np.testing.assert_allclose(raters['rho'], [1.0, 0.6, 0.8])
        self.assertTrue(raters['kappa_bar'].between(0.0, 1.0 + 1e-6).all())
        self.assertTrue(raters['kappa_bar_se'].isna().all())
        self.assertTrue(self.table.items['delta_se'].isna().all())
        self.assertEqual(len(self.table.curves), 3 * 7)
        self.assertEqual(self.table.diagnostics['iterations'], 4)

    def test_wrong_columns(self):
        """Test estimate tables enforce their column order"""
        with self.assertRaises(DataValidationError):
            EstimateTable(group='g', family=ModelFamily.GMF, raters=self.table.raters[ESTIMATE_COLUMNS[::-1]],
                          items=self.table.items, sigma=1.0, alpha=0.0, converged=True, laplace_loglik=0.0)

    def test_emit_and_read_back(self):
        """Test the fit bundle files and reading the estimates back as parameters"""
        written = emit_reports(fit_bundle(self.table), self.root)
        self.assertEqual(sorted(p.name for p in written),
                         ['curves.csv', 'estimates.csv', 'items.csv', 'summary.json'])
        summary = json.loads((self.root / 'summary.json').read_text())
        self.assertEqual(summary['family'], 'GMF')
        self.assertIsNone(summary['raters'][0]['kappa_bar_se'])
        frame = load_rater_parameters(self.root / 'estimates.csv', ModelFamily.GMF)
        np.testing.assert_allclose(frame['eta'], [-0.3, 0.1, 0.2])
        self.assertEqual(list(frame['rater']), ['r1', 'r2', 'r3'])

    def test_reports_reproducible(self):
        """Test emitting the same bundle twice gives identical files"""
        first = {p.name: p.read_bytes() for p in emit_reports(fit_bundle(self.table), self.root / 'a')}
        second = {p.name: p.read_bytes() for p in emit_reports(fit_bundle(self.table), self.root / 'b')}
        self.assertEqual(first, second)

    def test_group_summary(self):
        """Test the cross-group bundle lists groups and failures"""
        bundle = group_means_bundle({'family': self.table}, {'sport': 'singular'})
        frame = bundle.tables['group_summary']
        self.assertEqual(list(frame['group']), ['family'])
        self.assertEqual(bundle.summary['failed_groups'], {'sport': 'singular'})

    def test_empty_bundle(self):
        """Test a bundle without tables still writes its summary"""
        written = emit_reports(ReportBundle(summary={'ok': True}), self.root)
        self.assertEqual([p.name for p in written], ['summary.json'])


class TestLoadRaterParameters(unittest.TestCase):
    """Test cases for load_rater_parameters"""

    def setUp(self):
        """Set up a temporary directory"""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        """Remove the temporary directory"""
        self.tmp.cleanup()

    def test_tfm_defaults_rho(self):
        """Test a TFM table without rho gets rho = 1"""
        path = self.root / 'tfm.csv'
        path.write_text('rater,eta\nA,0.5\nB,-0.5\n')
        frame = load_rater_parameters(path, ModelFamily.TFM)
        np.testing.assert_array_equal(frame['rho'], [1.0, 1.0])

    def test_hrm_columns(self):
        """Test an HRM table needs criterion and slope"""
        path = self.root / 'hrm.csv'
        path.write_text('rater,rho,eta\nA,0.5,0.1\n')
        with self.assertRaises(DataValidationError):
            load_rater_parameters(path, ModelFamily.HRM)

    def test_non_numeric(self):
        """Test non-numeric parameter values are rejected"""
        path = self.root / 'bad.csv'
        path.write_text('rater,rho,eta\nA,high,0.1\n')
        with self.assertRaises(DataValidationError):
            load_rater_parameters(path, ModelFamily.GMF)


if __name__ == '__main__':
    unittest.main()
