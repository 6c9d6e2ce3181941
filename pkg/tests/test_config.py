"""Unit tests for configuration loading and overrides"""
import json
import tempfile
import unittest
from pathlib import Path
from src.core.config import FitConfig, RunConfig, StudyConfig, load_run_config, merge_overrides, run_config_from_dict
from src.core.exceptions import ConfigurationError


class TestConfiguration(unittest.TestCase):
    """Test cases for RunConfig, FitConfig and StudyConfig"""

    def setUp(self):
        """Set up test fixtures"""
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_defaults(self):
        """Test default fit and study settings"""
        config = RunConfig()
        self.assertEqual(config.fit.max_outer_iterations, 10)
        self.assertEqual(config.fit.scale_change_tolerance, 0.01)
        self.assertEqual(config.study.replications, 200)
        self.assertEqual(config.study.families, ('GMF', 'TFM'))

    def test_load_nested_document(self):
        """Test nested fit and study sections are loaded"""
        path = self.dir / 'run.json'
        path.write_text(json.dumps({
            'family': 'TFM',
            'threshold': 3,
            'fit': {'max_outer_iterations': 25},
            'study': {'replications': 10, 'families': ['gmf']},
        }))
        config = load_run_config(path)
        self.assertEqual(config.family, 'TFM')
        self.assertEqual(config.threshold, 3)
        self.assertEqual(config.fit.max_outer_iterations, 25)
        self.assertEqual(config.study.replications, 10)
        self.assertEqual(config.study.families, ('GMF',))

    def test_unknown_key(self):
        """Test unknown keys are rejected with their names"""
        with self.assertRaises(ConfigurationError) as ctx:
            run_config_from_dict({'thresold': 3})
        self.assertIn('thresold', str(ctx.exception))
        with self.assertRaises(ConfigurationError):
            run_config_from_dict({'fit': {'max_iter': 3}})

    def test_missing_and_invalid_files(self):
        """Test missing files and invalid JSON raise ConfigurationError"""
        with self.assertRaises(ConfigurationError):
            load_run_config(self.dir / 'absent.json')
        bad = self.dir / 'bad.json'
        bad.write_text('{not json')
        with self.assertRaises(ConfigurationError):
            load_run_config(bad)
        with self.assertRaises(ConfigurationError):
            run_config_from_dict([1, 2])

    def test_invalid_values(self):
        """Test value validation"""
        with self.assertRaises(ConfigurationError):
            FitConfig(scale_change_tolerance=0.0)
        with self.assertRaises(ConfigurationError):
            FitConfig(max_outer_iterations=0)
        with self.assertRaises(ConfigurationError):
            StudyConfig(eta_step=-0.1)
        with self.assertRaises(ConfigurationError):
            RunConfig(sigma=-1.0)
        with self.assertRaises(ConfigurationError):
            RunConfig(theta_min=1.0, theta_max=0.0)

    def test_overrides_win_and_none_ignored(self):
        """Test flags override file values and None leaves them alone"""
        config = run_config_from_dict({'threshold': 2, 'study': {'replications': 50}})
        merged = merge_overrides(config, {'threshold': None, 'study.replications': 5, 'fit.seed': 9,
                                          'output_dir': 'out'})
        self.assertEqual(merged.threshold, 2)
        self.assertEqual(merged.study.replications, 5)
        self.assertEqual(merged.fit.seed, 9)
        self.assertEqual(merged.output_dir, 'out')

    def test_invalid_override(self):
        """Test an unknown override key raises ConfigurationError"""
        with self.assertRaises(ConfigurationError):
            merge_overrides(RunConfig(), {'study.unknown': 1})


if __name__ == '__main__':
    unittest.main()
