"""Unit tests for ability modes and the slope update"""
import unittest
import numpy as np
from src.analysis.probability_model import record_probabilities
from src.core.config import FitConfig
from src.core.exceptions import ParameterError
from src.core.models.parameters import ModelSpec, ParameterSet
from src.estimation.hierarchical import (block_ascent, h_terms, maximize_h, maximize_rho, require_slope_family,
                                          score_terms)
from src.simulation.designs import complete_design, standard_normal_sample
from src.simulation.generator import simulate_dataset


class TestHierarchical(unittest.TestCase):
    """Test cases for the hierarchical-likelihood steps"""

    @classmethod
    def setUpClass(cls):
        """Simulate one GMF data set"""
        cls.truth = ParameterSet(
            theta_prime=standard_normal_sample(40, seed=2),
            sigma=1.2,
            rho=[0.5, 0.8, 1.0],
            eta=[0.4, 0.0, -0.4],
            delta=[-0.6, -0.2, 0.2, 0.6],
            alpha=0.1,
        )
        cls.spec = ModelSpec.default('GMF')
        cls.data = simulate_dataset(cls.truth, complete_design('hl', cls.truth, seed=4))

    def test_modes_are_stationary(self):
        """Test sum (y - p) * slope - theta = 0 at every mode"""
        modes = maximize_h(self.spec, self.truth, self.data)
        self.assertTrue(modes.converged)
        at_modes = self.truth.replace(theta_prime=modes.theta)
        p = record_probabilities(self.spec, at_modes, self.data)
        slopes = self.truth.sigma * self.truth.rho[self.data.rater_index]
        gradient = np.bincount(self.data.student_index, weights=(self.data.scores - p) * slopes) - modes.theta
        np.testing.assert_allclose(gradient, 0.0, atol=1e-7)
        self.assertTrue(np.all(modes.h_second < 0))

    def test_derivatives_at_random_points(self):
        """Test h' and h'' against central differences at 120 random abilities"""
        rng = np.random.default_rng(11)
        step = 1e-5
        for spec in (self.spec, ModelSpec(family='GMF', link='probit')):
            for _ in range(3):
                theta = rng.uniform(-3.0, 3.0, self.data.n_students)
                h, first, second = h_terms(spec, self.truth, self.data, theta)
                up = h_terms(spec, self.truth, self.data, theta + step)
                down = h_terms(spec, self.truth, self.data, theta - step)
                with self.subTest(link=spec.link.kind.value):
                    np.testing.assert_allclose(first, (up[0] - down[0]) / (2 * step), atol=1e-5)
                    np.testing.assert_allclose(second, (up[1] - down[1]) / (2 * step), atol=1e-5)

    def test_mode_maximises_h(self):
        """Test moving away from the mode lowers h"""
        modes = maximize_h(self.spec, self.truth, self.data)
        shifted = maximize_h(self.spec, self.truth, self.data, modes.theta + 0.3, FitConfig(inner_max_steps=1))
        self.assertGreaterEqual(modes.total, shifted.total - 1e-9)

    def test_unrated_students(self):
        """Test extra students without ratings get mode 0 and h'' = -1"""
        theta_init = np.concatenate([np.zeros(self.data.n_students), [1.5, -2.0]])
        modes = maximize_h(self.spec, self.truth, self.data, theta_init)
        np.testing.assert_allclose(modes.theta[-2:], 0.0, atol=1e-7)
        np.testing.assert_allclose(modes.h_second[-2:], -1.0)
        with self.assertRaises(ParameterError):
            maximize_h(self.spec, self.truth, self.data, np.zeros(3))

    def test_score_terms_probit(self):
        """Test non-logistic score terms against finite differences"""
        spec = ModelSpec(family='GMF', link='probit')
        predictor = np.linspace(-3.0, 3.0, 13)
        h = 1e-5
        for y in (np.zeros(13, dtype=np.int8), np.ones(13, dtype=np.int8)):
            loglik, first, second = score_terms(spec, predictor, y)
            up = score_terms(spec, predictor + h, y)
            down = score_terms(spec, predictor - h, y)
            np.testing.assert_allclose(first, (up[0] - down[0]) / (2 * h), atol=1e-6)
            np.testing.assert_allclose(second, (up[1] - down[1]) / (2 * h), atol=1e-5)

    def test_rho_update_in_box(self):
        """Test the slope update stays in [0, 1] and does not lower the likelihood"""
        modes = maximize_h(self.spec, self.truth, self.data)
        start = self.truth.replace(rho=[0.2, 0.2, 0.2])
        rho = maximize_rho(self.spec, start, self.data, modes.theta)
        self.assertTrue(np.all((rho >= 0.0) & (rho <= 1.0)))

        def loglik(values):
            params = start.replace(rho=values, theta_prime=modes.theta)
            p = record_probabilities(self.spec, params, self.data)
            y = self.data.scores
            return np.sum(y * np.log(p) + (1 - y) * np.log(1 - p))

        self.assertGreaterEqual(loglik(rho), loglik(start.rho))

    def test_tfm_rho_fixed(self):
        """Test TFM keeps every rho at one"""
        tfm = ModelSpec.default('TFM')
        np.testing.assert_array_equal(maximize_rho(tfm, self.truth, self.data, self.truth.theta_prime), 1.0)

    def test_block_ascent(self):
        """Test block ascent returns modes and slopes of the right size"""
        theta, rho, sweeps = block_ascent(self.spec, self.truth.replace(sigma=1.0), self.data,
                                          self.truth.theta_prime)
        self.assertEqual(theta.shape, (40,))
        self.assertEqual(rho.shape, (3,))
        self.assertGreaterEqual(sweeps, 1)

    def test_other_families_rejected(self):
        """Test PROBIT and HRM are rejected"""
        for family in ('PROBIT', 'HRM'):
            with self.assertRaises(ParameterError):
                require_slope_family(ModelSpec.default(family))


if __name__ == '__main__':
    unittest.main()
