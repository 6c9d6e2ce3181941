"""Unit tests for rating file ingestion"""
import tempfile
import unittest
from pathlib import Path
import numpy as np
import pandas as pd
from src.core.exceptions import DataValidationError
from src.data.ingest import ALL_GROUP, dichotomize, ingest, ingest_frame
from src.data.sources.csv_source import detect_delimiter


def rating_frame() -> pd.DataFrame:
    return pd.DataFrame({
        'student': ['s1', 's1', 's2', 's2', 's3', 's3', 's1', 's2'],
        'rater': ['A', 'B', 'A', 'B', 'A', 'B', 'A', 'A'],
        'item': ['i1', 'i1', 'i1', 'i1', 'i1', 'i1', 'i2', 'i2'],
        'score': ['5', '2', '3', '1', '4', '3', '2', '4'],
        'topic': ['family'] * 6 + ['sport'] * 2,
    })


class TestIngestFrame(unittest.TestCase):
    """Test cases for ingest_frame"""

    def setUp(self):
        """Set up a raw rating table"""
        self.frame = rating_frame()

    def test_threshold_mapping(self):
        """Test scores at or above the threshold become 1"""
        data = ingest_frame(self.frame, threshold=3)[ALL_GROUP]
        frame = data.to_frame().sort_values(['student', 'rater', 'item']).reset_index(drop=True)
        expected = {('s1', 'A', 'i1'): 1, ('s1', 'B', 'i1'): 0, ('s2', 'B', 'i1'): 0, ('s3', 'B', 'i1'): 1,
                    ('s1', 'A', 'i2'): 0, ('s2', 'A', 'i2'): 1}
        for (student, rater, item), score in expected.items():
            with self.subTest(student=student, rater=rater, item=item):
                row = frame[(frame['student'] == student) & (frame['rater'] == rater) & (frame['item'] == item)]
                self.assertEqual(int(row['score'].iloc[0]), score)
        self.assertEqual(data.n_records, 8)

    def test_groups(self):
        """Test a grouping column splits the table in sorted order"""
        datasets = ingest_frame(self.frame, threshold=3, group_by='topic')
        self.assertEqual(list(datasets), ['family', 'sport'])
        self.assertEqual(datasets['family'].n_records, 6)
        self.assertEqual(datasets['sport'].rater_ids, ('A',))

    def test_missing_column(self):
        """Test a missing required column is named"""
        with self.assertRaises(DataValidationError) as ctx:
            ingest_frame(self.frame.drop(columns=['item']), threshold=3)
        self.assertIn('item', str(ctx.exception))

    def test_missing_group_column(self):
        """Test the grouping column is required when named"""
        with self.assertRaises(DataValidationError):
            ingest_frame(self.frame, threshold=3, group_by='essay')

    def test_non_numeric_score(self):
        """Test non-numeric scores are reported with their file row"""
        self.frame.loc[2, 'score'] = 'x'
        with self.assertRaises(DataValidationError) as ctx:
            ingest_frame(self.frame, threshold=3)
        self.assertIn("'x'", str(ctx.exception))
        self.assertIn('4', str(ctx.exception))

    def test_missing_score(self):
        """Test empty scores are rejected"""
        self.frame.loc[0, 'score'] = np.nan
        with self.assertRaises(DataValidationError) as ctx:
            ingest_frame(self.frame, threshold=3)
        self.assertIn('Missing score', str(ctx.exception))

    def test_blank_identifier(self):
        """Test blank rater identifiers are rejected"""
        self.frame.loc[1, 'rater'] = '  '
        with self.assertRaises(DataValidationError) as ctx:
            ingest_frame(self.frame, threshold=3)
        self.assertIn('rater identifier', str(ctx.exception))

    def test_duplicate_rating(self):
        """Test a repeated (student, rater, item) triple is rejected"""
        frame = pd.concat([self.frame, self.frame.iloc[[0]]], ignore_index=True)
        with self.assertRaises(DataValidationError) as ctx:
            ingest_frame(frame, threshold=3)
        self.assertIn('Duplicate', str(ctx.exception))

    def test_threshold_out_of_range(self):
        """Test a threshold beyond the observed scores is rejected"""
        with self.assertRaises(DataValidationError):
            ingest_frame(self.frame, threshold=9)

    def test_dichotomize(self):
        """Test dichotomize on a plain series"""
        np.testing.assert_array_equal(dichotomize(pd.Series([1.0, 2.5, 3.0]), 2.5), [0, 1, 1])


class TestIngestFiles(unittest.TestCase):
    """Test cases for ingest on files"""

    def setUp(self):
        """Set up a temporary directory"""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.frame = rating_frame()

    def tearDown(self):
        """Remove the temporary directory"""
        self.tmp.cleanup()

    def test_csv(self):
        """Test a comma-separated file"""
        path = self.root / 'ratings.csv'
        self.frame.to_csv(path, index=False)
        self.assertEqual(detect_delimiter(str(path)), ',')
        datasets = ingest(str(path), threshold=3, group_by='topic')
        self.assertEqual(sorted(datasets), ['family', 'sport'])

    def test_tab_detected(self):
        """Test a tab-separated file with a .txt extension"""
        path = self.root / 'ratings.txt'
        self.frame.to_csv(path, index=False, sep='\t')
        self.assertEqual(detect_delimiter(str(path)), '\t')
        self.assertEqual(ingest(str(path), threshold=3)[ALL_GROUP].n_records, 8)

    def test_explicit_delimiter(self):
        """Test an explicit delimiter overrides detection"""
        path = self.root / 'ratings.tsv'
        self.frame.to_csv(path, index=False, sep='\t')
        self.assertEqual(ingest(str(path), threshold=3, delimiter='\t')[ALL_GROUP].n_students, 3)

    def test_parquet(self):
        """Test a Parquet table with numeric identifiers"""
        frame = self.frame.assign(student=[1, 1, 2, 2, 3, 3, 1, 2], score=self.frame['score'].astype(int))
        path = self.root / 'ratings.parquet'
        frame.to_parquet(path, index=False)
        data = ingest(str(path), threshold=3)[ALL_GROUP]
        self.assertEqual(data.student_ids, ('1', '2', '3'))
        self.assertEqual(int(data.scores.sum()), 5)

    def test_unsupported_extension(self):
        """Test unknown file types are rejected"""
        path = self.root / 'ratings.xlsx'
        path.write_text('student,rater,item,score\n')
        with self.assertRaises(DataValidationError):
            ingest(str(path), threshold=1)

    def test_missing_file(self):
        """Test a missing file raises FileNotFoundError"""
        with self.assertRaises(FileNotFoundError):
            ingest(str(self.root / 'absent.csv'), threshold=1)


if __name__ == '__main__':
    unittest.main()
