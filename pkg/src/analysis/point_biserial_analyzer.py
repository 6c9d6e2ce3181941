"""Point-biserial validation of ratings against ability estimates"""
from typing import List

import numpy as np
import pandas as pd
from scipy import stats

from src.core.interfaces.analyzer import AnalysisResult, IAnalyzer
from src.core.logging_config import get_logger
from src.core.models.ratings import RatingDataset

logger = get_logger(__name__)


class PointBiserialAnalyzer(IAnalyzer):
    """
    Correlation between each rater's 0/1 ratings on an item and the abilities of the rated students

    Expects one row per rating with columns ``rater``, ``item``, ``score``
    (0/1) and ``ability``.
    """

    COLUMNS = ['rater', 'item', 'score', 'ability']

    def analyze(self, data: pd.DataFrame, **kwargs) -> AnalysisResult:
        """
        Compute the correlations per (rater, item)

        Args:
            data: Rating table with abilities
            **kwargs: Optional parameters
                - min_ratings: Pairs with fewer ratings are reported as missing (default 2)

        Returns:
            AnalysisResult with metrics ``correlations`` (rater, item,
            n_ratings, correlation, p_value) and ``rater_means`` (rater,
            mean_correlation, n_items)

        Raises:
            ValueError: If data is invalid
        """
        if not self.validate_data(data, **kwargs):
            raise ValueError(f"Point-biserial analysis needs numeric columns {self.get_required_columns()}")
        min_ratings = int(kwargs.get('min_ratings', 2))

        rows = []
        undefined = 0
        for (rater, item), part in data.groupby(['rater', 'item'], sort=True):
            scores = part['score'].to_numpy(dtype=float)
            ability = part['ability'].to_numpy(dtype=float)
            n = len(scores)
            # constant ratings or abilities leave the correlation undefined
            if n < min_ratings or np.ptp(scores) == 0.0 or np.ptp(ability) == 0.0:
                correlation, p_value = np.nan, np.nan
                undefined += 1
            else:
                correlation, p_value = stats.pointbiserialr(scores, ability)
            rows.append({'rater': rater, 'item': item, 'n_ratings': n,
                         'correlation': float(correlation), 'p_value': float(p_value)})

        correlations = pd.DataFrame(rows, columns=['rater', 'item', 'n_ratings', 'correlation', 'p_value'])
        rater_means = (correlations.groupby('rater', sort=True)['correlation']
                       .agg(mean_correlation='mean', n_items='count').reset_index())
        if undefined:
            logger.warning(f"{undefined} rater-item correlations are undefined (constant ratings)")
        metadata = {'n_pairs': len(correlations), 'n_undefined': undefined}
        return AnalysisResult(metrics={'correlations': correlations, 'rater_means': rater_means},
                              metadata=metadata)

    def validate_data(self, data: pd.DataFrame, **kwargs) -> bool:
        if data is None or data.empty:
            return False
        if any(column not in data.columns for column in self.get_required_columns()):
            return False
        for column in ('score', 'ability'):
            if not pd.api.types.is_numeric_dtype(data[column]) or data[column].isna().any():
                return False
        return bool(data['score'].isin([0, 1]).all())

    def get_required_columns(self) -> List[str]:
        return list(self.COLUMNS)


def validation_frame(data: RatingDataset, ability: np.ndarray) -> pd.DataFrame:
    """Rating table of a data set with each record's student ability attached"""
    ability = np.asarray(ability, dtype=float)
    if len(ability) != data.n_students:
        raise ValueError(f"Expected {data.n_students} abilities, got {len(ability)}")
    frame = data.to_frame()
    frame['ability'] = ability[data.student_index]
    return frame


def point_biserial_validation(data: RatingDataset, ability: np.ndarray) -> AnalysisResult:
    """Correlations of every rater's ratings on every item with the estimated abilities"""
    return PointBiserialAnalyzer().analyze(validation_frame(data, ability))
