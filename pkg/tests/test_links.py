"""Unit tests for link functions"""
import unittest
import numpy as np
from src.core.models.links import LinkFunction, LinkKind, PREDICTOR_CLAMP, get_link


class TestLinkFunction(unittest.TestCase):
    """Test cases for LinkFunction"""

    def setUp(self):
        """Set up test fixtures"""
        self.grid = np.linspace(-6.0, 6.0, 49)
        self.links = [LinkFunction(kind) for kind in LinkKind]

    def test_logit_values(self):
        """Test logistic cdf at known points"""
        link = LinkFunction('logit')
        self.assertAlmostEqual(link.cdf(0.0), 0.5, places=12)
        self.assertAlmostEqual(link.cdf(np.log(3.0)), 0.75, places=12)
        self.assertAlmostEqual(link.pdf(0.0), 0.25, places=12)

    def test_probit_values(self):
        """Test probit cdf and pdf at zero"""
        link = LinkFunction('probit')
        self.assertAlmostEqual(link.cdf(0.0), 0.5, places=12)
        self.assertAlmostEqual(link.pdf(0.0), 1.0 / np.sqrt(2.0 * np.pi), places=12)
        self.assertAlmostEqual(link.cdf(1.959963984540054), 0.975, places=9)

    def test_cdf_plus_sf_is_one(self):
        """Test F + (1 - F) = 1 for every link"""
        for link in self.links:
            with self.subTest(link=link):
                np.testing.assert_allclose(link.cdf(self.grid) + link.sf(self.grid), 1.0, atol=1e-12)

    def test_pdf_matches_numerical_derivative(self):
        """Test F' against central differences away from kinks"""
        h = 1e-6
        grid = self.grid[np.abs(self.grid) > 0.1]
        for link in self.links:
            with self.subTest(link=link):
                numeric = (link.cdf(grid + h) - link.cdf(grid - h)) / (2 * h)
                np.testing.assert_allclose(link.pdf(grid), numeric, atol=1e-6)

    def test_pdf_derivative_matches_numerical_derivative(self):
        """Test F'' against central differences away from kinks"""
        h = 1e-5
        grid = self.grid[np.abs(self.grid) > 0.1]
        for link in self.links:
            with self.subTest(link=link):
                numeric = (link.pdf(grid + h) - link.pdf(grid - h)) / (2 * h)
                np.testing.assert_allclose(link.pdf_derivative(grid), numeric, atol=1e-5)

    def test_log_cdf_and_log_sf(self):
        """Test log-probabilities against logs of the probabilities"""
        for link in self.links:
            with self.subTest(link=link):
                cdf = link.cdf(self.grid)
                sf = link.sf(self.grid)
                mask_cdf = cdf > 1e-300
                mask_sf = sf > 1e-300
                np.testing.assert_allclose(link.log_cdf(self.grid)[mask_cdf], np.log(cdf[mask_cdf]), rtol=1e-8)
                np.testing.assert_allclose(link.log_sf(self.grid)[mask_sf], np.log(sf[mask_sf]), rtol=1e-8)

    def test_log_sf_finite_in_far_tail(self):
        """Test the logistic and probit log-survival do not underflow"""
        for kind in (LinkKind.LOGIT, LinkKind.PROBIT):
            with self.subTest(kind=kind):
                self.assertTrue(np.isfinite(LinkFunction(kind).log_sf(30.0)))
                self.assertTrue(np.isfinite(LinkFunction(kind).log_cdf(-30.0)))

    def test_ppf_inverts_cdf(self):
        """Test F^{-1}(F(x)) = x"""
        grid = np.linspace(-3.0, 3.0, 13)
        for kind in (LinkKind.LOGIT, LinkKind.PROBIT, LinkKind.CAUCHIT, LinkKind.CLOGLOG):
            link = LinkFunction(kind)
            with self.subTest(kind=kind):
                np.testing.assert_allclose(link.ppf(link.cdf(grid)), grid, atol=1e-8)

    def test_predictor_clamp(self):
        """Test predictors beyond the clamp give the clamp's value"""
        link = LinkFunction('logit')
        self.assertEqual(link.cdf(1e6), link.cdf(PREDICTOR_CLAMP))
        self.assertEqual(link.sf(-1e6), link.sf(-PREDICTOR_CLAMP))

    def test_scalar_in_scalar_out(self):
        """Test scalar inputs return Python floats"""
        self.assertIsInstance(LinkFunction('probit').cdf(0.3), float)
        self.assertEqual(LinkFunction('probit').cdf(np.zeros(3)).shape, (3,))

    def test_get_link_and_equality(self):
        """Test get_link accepts names, kinds and instances"""
        link = get_link('logit')
        self.assertEqual(link, LinkFunction(LinkKind.LOGIT))
        self.assertIs(get_link(link), link)
        self.assertNotEqual(link, LinkFunction('probit'))
        self.assertEqual(hash(link), hash(LinkFunction('logit')))

    def test_unknown_link(self):
        """Test an unknown link name is rejected"""
        with self.assertRaises(ValueError):
            LinkFunction('tanh')


if __name__ == '__main__':
    unittest.main()
