"""Unit tests for the hierarchical-likelihood fitter"""
import unittest
from unittest import mock
import numpy as np
from scipy import optimize
from src.core.config import FitConfig
from src.core.exceptions import ConfigurationError, IdentifiabilityError
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset
from src.estimation.fitter import fit
from src.simulation.designs import ESSAY_SIGMA, complete_design, generate_study2_design, standard_normal_sample
from src.simulation.generator import simulate_dataset


class TestFit(unittest.TestCase):
    """Test cases for fit on simulated GMF data"""

    @classmethod
    def setUpClass(cls):
        """Simulate one data set and fit the GMF and TFM to it"""
        cls.truth = ParameterSet(
            theta_prime=standard_normal_sample(60, seed=5),
            sigma=1.0,
            rho=[1.0, 0.8, 0.6, 0.9],
            eta=[-0.6, -0.2, 0.2, 0.6],
            delta=np.linspace(-1.0, 1.0, 6),
            alpha=0.0,
        )
        cls.data = simulate_dataset(cls.truth, complete_design('fit', cls.truth, seed=8))
        cls.gmf = fit(ModelSpec.default(ModelFamily.GMF), cls.data)
        cls.tfm = fit(ModelSpec.default(ModelFamily.TFM), cls.data, compute_covariance=False)

    def test_identifiers(self):
        """Test the result carries the data set's identifiers"""
        self.assertEqual(self.gmf.rater_ids, ('r1', 'r2', 'r3', 'r4'))
        self.assertEqual(len(self.gmf.item_ids), 6)
        self.assertEqual(len(self.gmf.student_ids), 60)

    def test_constraints_hold(self):
        """Test centring, the rho scale and standardised abilities"""
        params = self.gmf.params
        self.assertAlmostEqual(float(params.eta.sum()), 0.0, places=8)
        self.assertAlmostEqual(float(params.delta.sum()), 0.0, places=8)
        self.assertAlmostEqual(float(params.theta_prime.mean()), 0.0, places=8)
        self.assertAlmostEqual(float(params.theta_prime.std()), 1.0, places=8)
        self.assertFalse(self.gmf.diagnostics['rho_scale_skipped'])
        self.assertAlmostEqual(float(params.rho.max()), 1.0, places=10)
        self.assertTrue(np.all(params.rho >= 0.0))

    def test_recovers_severity_order(self):
        """Test fitted severities follow the generating ones"""
        eta = self.gmf.params.eta
        self.assertGreater(np.corrcoef(eta, self.truth.eta)[0, 1], 0.9)
        delta = self.gmf.params.delta
        self.assertGreater(np.corrcoef(delta, self.truth.delta)[0, 1], 0.9)

    def test_scale_plausible(self):
        """Test sigma lands near the generating value"""
        self.assertGreater(self.gmf.params.sigma, 0.5)
        self.assertLess(self.gmf.params.sigma, 1.6)
        self.assertTrue(np.isfinite(self.gmf.laplace_loglik))

    def test_history_and_covariance(self):
        """Test the iteration history and the covariance are filled in"""
        self.assertEqual(len(self.gmf.history), self.gmf.iterations)
        self.assertGreaterEqual(self.gmf.iterations, 1)
        self.assertIsNotNone(self.gmf.covariance)
        self.assertIn('glm_iterations', self.gmf.diagnostics)

    def test_natural_theta(self):
        """Test natural abilities are sigma times the standardised ones"""
        np.testing.assert_allclose(self.gmf.natural_theta, self.gmf.params.sigma * self.gmf.params.theta_prime)

    def test_tfm_rho_fixed(self):
        """Test the TFM keeps every rho at one"""
        np.testing.assert_array_equal(self.tfm.params.rho, np.ones(4))
        self.assertIsNone(self.tfm.covariance)
        self.assertGreater(np.corrcoef(self.tfm.params.eta, self.truth.eta)[0, 1], 0.9)


class TestFitScale(unittest.TestCase):
    """Test cases for the scale estimate on sparse and degenerate fits"""

    @classmethod
    def setUpClass(cls):
        """Fit the GMF to one simulated essay-topic data set"""
        cls.design = generate_study2_design('family', seed=1)
        cls.data = simulate_dataset(cls.design.true_params, cls.design)
        cls.result = fit(ModelSpec.default(ModelFamily.GMF), cls.data, compute_covariance=False)

    def test_sparse_design_keeps_scale(self):
        """Test sigma stays near the generating 2.51 with about five ratings per student"""
        sigma = self.result.params.sigma
        self.assertFalse(self.result.diagnostics['sigma_collapsed'])
        self.assertGreater(sigma, 0.6 * ESSAY_SIGMA)
        self.assertLess(sigma, 1.5 * ESSAY_SIGMA)

    def test_sparse_design_rho_not_degenerate(self):
        """Test the slopes are not all pushed to their upper bound"""
        rho = self.result.params.rho
        self.assertAlmostEqual(float(rho.max()), 1.0, places=10)
        self.assertLess(float(rho.min()), 1.0 - 1e-6)

    def test_scale_floor_marks_non_convergence(self):
        """Test a sigma below the configured floor stops the fit unconverged"""
        truth = ParameterSet(theta_prime=standard_normal_sample(30, seed=3), sigma=1.0, rho=[1.0, 0.7],
                             eta=[-0.3, 0.3], delta=[-0.5, 0.0, 0.5], alpha=0.0)
        data = simulate_dataset(truth, complete_design('floor', truth, seed=2))
        result = fit(ModelSpec.default(ModelFamily.GMF), data, FitConfig(min_sigma=50.0), compute_covariance=False)
        self.assertTrue(result.diagnostics['sigma_collapsed'])
        self.assertFalse(result.converged)
        self.assertEqual(result.iterations, 1)


class TestFitLineSearchFailure(unittest.TestCase):
    """Test cases for a structural step that lowers the objective"""

    def test_failure_recorded(self):
        """Test the failed step is recorded in the diagnostics and the fit is unconverged"""
        truth = ParameterSet(theta_prime=standard_normal_sample(30, seed=3), sigma=1.0, rho=[1.0, 0.7],
                             eta=[-0.3, 0.3], delta=[-0.5, 0.0, 0.5], alpha=0.0)
        data = simulate_dataset(truth, complete_design('search', truth, seed=2))

        def worse(objective, x0, **kwargs):
            return optimize.OptimizeResult(x=np.asarray(x0), fun=float(objective(x0)) + 10.0, success=False,
                                           nit=3, message='ABNORMAL_TERMINATION_IN_LNSRCH',
                                           jac=np.zeros(len(x0)))

        with mock.patch.object(optimize, 'minimize', side_effect=worse):
            result = fit(ModelSpec.default(ModelFamily.GMF), data, compute_covariance=False)
        self.assertFalse(result.converged)
        failures = result.diagnostics['line_search_failures']
        self.assertEqual(len(failures), 1)
        self.assertEqual(failures[0]['iteration'], 1)
        self.assertIn('LNSRCH', failures[0]['message'])
        self.assertAlmostEqual(failures[0]['initial_objective'] - failures[0]['final_objective'], 10.0, places=6)
        self.assertTrue(np.all(np.isfinite(result.params.eta)))


class TestFitRejects(unittest.TestCase):
    """Test cases for inputs fit refuses"""

    def setUp(self):
        """Set up a small connected data set"""
        self.data = RatingDataset.from_arrays(['a', 'a', 'b', 'b'], ['r1', 'r2', 'r1', 'r2'],
                                              ['i1', 'i1', 'i1', 'i1'], [1, 0, 0, 1])

    def test_probit_family(self):
        """Test PROBIT cannot be fitted"""
        with self.assertRaises(ConfigurationError):
            fit(ModelSpec.default(ModelFamily.PROBIT), self.data)

    def test_hrm_family(self):
        """Test HRM cannot be fitted"""
        with self.assertRaises(ConfigurationError):
            fit(ModelSpec.default(ModelFamily.HRM), self.data)

    def test_disconnected_design(self):
        """Test disjoint rater blocks are rejected"""
        data = RatingDataset.from_arrays(['a', 'b'], ['r1', 'r2'], ['i1', 'i2'], [1, 0])
        with self.assertRaises(IdentifiabilityError):
            fit(ModelSpec.default(ModelFamily.GMF), data)


if __name__ == '__main__':
    unittest.main()
