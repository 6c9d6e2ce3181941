"""Unit tests for GLM starting values and design connectivity"""
import unittest
import numpy as np
from src.core.exceptions import IdentifiabilityError
from src.core.models.parameters import ParameterSet
from src.core.models.ratings import RatingDataset
from src.estimation.glm_init import check_connectivity, initialize_glm
from src.simulation.designs import complete_design, standard_normal_sample
from src.simulation.generator import simulate_dataset


class TestConnectivity(unittest.TestCase):
    """Test cases for check_connectivity"""

    def test_connected(self):
        """Test a linked design passes"""
        data = RatingDataset.from_arrays(['a', 'a', 'b'], ['r1', 'r2', 'r2'], ['i1', 'i1', 'i2'], [1, 0, 1])
        check_connectivity(data)

    def test_disconnected_components_named(self):
        """Test disconnected blocks are reported with their raters and items"""
        data = RatingDataset.from_arrays(['a', 'b'], ['r1', 'r2'], ['i1', 'i2'], [1, 0])
        with self.assertRaises(IdentifiabilityError) as ctx:
            check_connectivity(data)
        self.assertIn('2 components', str(ctx.exception))
        self.assertIn('r1', str(ctx.exception))
        self.assertEqual(len(ctx.exception.components), 2)


class TestInitializeGlm(unittest.TestCase):
    """Test cases for initialize_glm"""

    @classmethod
    def setUpClass(cls):
        """Simulate one data set from an additive model"""
        cls.truth = ParameterSet(
            theta_prime=standard_normal_sample(200, seed=11),
            sigma=1.0,
            rho=np.ones(4),
            eta=[-1.0, -0.3, 0.3, 1.0],
            delta=[-1.2, -0.5, 0.0, 0.5, 1.2],
            alpha=0.2,
        )
        cls.design = complete_design('glm', cls.truth, seed=5)
        cls.data = simulate_dataset(cls.truth, cls.design)

    def test_centred(self):
        """Test the effects are centred"""
        initial = initialize_glm(self.data)
        self.assertAlmostEqual(initial.theta.mean(), 0.0, places=10)
        self.assertAlmostEqual(initial.eta.mean(), 0.0, places=10)
        self.assertAlmostEqual(initial.delta.mean(), 0.0, places=10)
        self.assertGreaterEqual(initial.iterations, 1)

    def test_recovers_effects(self):
        """Test rater and item effects track the generating values"""
        initial = initialize_glm(self.data)
        self.assertGreater(np.corrcoef(initial.eta, self.truth.eta)[0, 1], 0.95)
        self.assertGreater(np.corrcoef(initial.delta, self.truth.delta)[0, 1], 0.95)
        self.assertTrue(np.all(np.diff(initial.eta) > 0))

    def test_complete_separation_bounded(self):
        """Test a student with only passing scores stays within the separation bound"""
        data = RatingDataset.from_arrays(
            ['a'] * 4 + ['b'] * 4 + ['c'] * 4,
            ['r1', 'r1', 'r2', 'r2'] * 3,
            ['i1', 'i2', 'i1', 'i2'] * 3,
            [1, 1, 1, 1, 0, 1, 1, 0, 1, 0, 0, 1],
        )
        initial = initialize_glm(data)
        self.assertTrue(np.all(np.isfinite(initial.theta)))
        self.assertLessEqual(np.max(np.abs(initial.theta)), 2 * 8.0)
        self.assertEqual(int(np.argmax(initial.theta)), 0)

    def test_disconnected_rejected(self):
        """Test a disconnected design raises before fitting"""
        data = RatingDataset.from_arrays(['a', 'b'], ['r1', 'r2'], ['i1', 'i2'], [1, 0])
        with self.assertRaises(IdentifiabilityError):
            initialize_glm(data)


if __name__ == '__main__':
    unittest.main()
