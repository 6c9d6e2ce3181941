"""Unit tests for model specifications and parameter sets"""
import dataclasses
import unittest
import numpy as np
from src.analysis.probability_model import record_probabilities
from src.core.exceptions import ParameterError
from src.core.models.links import LinkFunction, LinkKind
from src.core.models.parameters import (HrmLatentSpec, HrmSignConvention, ModelFamily, ModelSpec,
                                        ParameterSet)
from src.core.models.ratings import RatingDataset


def crossed_dataset(n_students, n_raters, n_items):
    s, r, i = np.meshgrid(np.arange(n_students), np.arange(n_raters), np.arange(n_items), indexing='ij')
    return RatingDataset.from_arrays([f's{k:02d}' for k in s.ravel()], [f'r{k}' for k in r.ravel()],
                                     [f'i{k}' for k in i.ravel()], np.zeros(s.size, dtype=int))


class TestModelSpec(unittest.TestCase):
    """Test cases for ModelSpec"""

    def test_default_links(self):
        """Test default links per family"""
        self.assertEqual(ModelSpec.default('PROBIT').link.kind, LinkKind.PROBIT)
        self.assertEqual(ModelSpec.default(ModelFamily.GMF).link.kind, LinkKind.LOGIT)

    def test_probit_family_needs_probit_link(self):
        """Test PROBIT with a logistic link is rejected"""
        with self.assertRaises(ParameterError):
            ModelSpec(family=ModelFamily.PROBIT, link=LinkFunction('logit'))

    def test_coercion(self):
        """Test string family, link and convention are coerced"""
        spec = ModelSpec(family='HRM', link='probit', hrm_sign_convention='as_printed')
        self.assertIs(spec.family, ModelFamily.HRM)
        self.assertEqual(spec.link, LinkFunction('probit'))
        self.assertIs(spec.hrm_sign_convention, HrmSignConvention.AS_PRINTED)

    def test_hrm_latent_spec(self):
        """Test HRM link alternatives build an HRM specification"""
        spec = HrmLatentSpec(LinkKind.PROBIT, LinkKind.LOGIT).model_spec()
        self.assertIs(spec.family, ModelFamily.HRM)
        self.assertEqual(spec.level1_link.kind, LinkKind.PROBIT)
        self.assertEqual(spec.link.kind, LinkKind.LOGIT)

    def test_hrm_quantities_live_on_parameter_set(self):
        """Test HrmLatentSpec holds only links and the HRM rater parameters are ParameterSet fields"""
        self.assertEqual([f.name for f in dataclasses.fields(HrmLatentSpec)], ['level1_link', 'level2_link'])
        names = {f.name for f in dataclasses.fields(ParameterSet)}
        self.assertTrue({'alpha', 'delta', 'criterion', 'slope'} <= names)


class TestParameterSet(unittest.TestCase):
    """Test cases for ParameterSet"""

    def setUp(self):
        """Set up test fixtures"""
        rng = np.random.default_rng(3)
        self.params = ParameterSet(
            theta_prime=rng.normal(0.4, 1.7, 12),
            sigma=0.8,
            rho=[0.3, 0.9, 1.0],
            eta=[0.5, -0.2, 1.1],
            delta=[0.2, 0.7, -0.1, 0.4],
            alpha=0.25,
        )

    def test_dimensions(self):
        """Test dimension properties"""
        self.assertEqual((self.params.n_students, self.params.n_raters, self.params.n_items), (12, 3, 4))
        np.testing.assert_allclose(self.params.theta, 0.8 * self.params.theta_prime)

    def test_invalid_values(self):
        """Test invalid parameter values are rejected"""
        with self.assertRaises(ParameterError):
            self.params.replace(sigma=0.0)
        with self.assertRaises(ParameterError):
            self.params.replace(rho=[0.3, 1.2, 1.0])
        with self.assertRaises(ParameterError):
            self.params.replace(eta=[0.5, np.nan, 1.0])
        with self.assertRaises(ParameterError):
            self.params.replace(eta=[0.5, 0.1])
        with self.assertRaises(ParameterError):
            self.params.replace(slope=np.ones((2, 4)))

    def test_read_only(self):
        """Test parameter arrays are read-only"""
        with self.assertRaises(ValueError):
            self.params.rho[0] = 0.5

    def test_probit_derived_parameters(self):
        """Test probit noise scale and threshold"""
        params = self.params.replace(rho=[0.6, 0.8, 1.0])
        np.testing.assert_allclose(params.noise_scale, [4.0 / 3.0, 0.75, 0.0])
        np.testing.assert_allclose(params.threshold, params.eta * params.noise_scale)

    def test_constraint_violations(self):
        """Test unconstrained parameters report violations and standardized ones do not"""
        self.assertTrue(self.params.constraint_violations())
        self.assertEqual(self.params.standardized().constraint_violations(tol=1e-9), [])

    def test_standardized_preserves_probabilities(self):
        """Test standardisation leaves every GMF success probability unchanged"""
        data = crossed_dataset(12, 3, 4)
        spec = ModelSpec.default('GMF')
        before = record_probabilities(spec, self.params, data)
        after = record_probabilities(spec, self.params.standardized(), data)
        np.testing.assert_allclose(after, before, rtol=1e-10)

    def test_rho_max_constraint(self):
        """Test the optional max(rho) == 1 constraint"""
        params = self.params.replace(rho=[0.3, 0.5, 0.9]).standardized()
        self.assertEqual(params.constraint_violations(), [])
        self.assertEqual(len(params.constraint_violations(rho_max_scaled=True)), 1)

    def test_hrm_parameters(self):
        """Test HRM parameters are validated and required"""
        with self.assertRaises(ParameterError):
            self.params.require_hrm()
        hrm = self.params.replace(criterion=[0.1, 0.2, 0.3], slope=np.ones((3, 4)))
        hrm.require_hrm()
        with self.assertRaises(ParameterError):
            self.params.replace(criterion=[0.1, 0.2])


if __name__ == '__main__':
    unittest.main()
