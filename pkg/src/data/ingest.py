"""Rating file ingestion: validation, dichotomisation and grouping"""
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.core.exceptions import DataValidationError
from src.core.interfaces.data_source import IDataSource
from src.core.logging_config import get_logger
from src.core.models.ratings import RATING_COLUMNS, RatingDataset
from src.data.sources.csv_source import CSVDataSource
from src.data.sources.parquet_source import ParquetDataSource

logger = get_logger(__name__)

ALL_GROUP = 'all'
_SOURCES: List[IDataSource] = [CSVDataSource(), ParquetDataSource()]


def source_for(path: str) -> IDataSource:
    """Pick the data source that accepts the file extension"""
    for source in _SOURCES:
        if source.validate(path):
            return source
    supported = sorted(ext for source in _SOURCES for ext in source.get_supported_extensions())
    raise DataValidationError(f"Unsupported rating file {path}; expected one of {supported}")


def _row_list(mask: pd.Series, limit: int = 5) -> str:
    rows = [str(int(k) + 2) for k in np.nonzero(mask.to_numpy())[0][:limit]]
    more = '' if mask.sum() <= limit else ', ...'
    return ', '.join(rows) + more


def numeric_scores(frame: pd.DataFrame) -> pd.Series:
    """
    Parse the score column as numbers

    Raises:
        DataValidationError: For missing or non-numeric scores, naming file rows (header is row 1)
    """
    raw = frame['score']
    text = raw.astype(str).str.strip()
    missing = raw.isna() | (text == '')
    if missing.any():
        raise DataValidationError(f"Missing score in {int(missing.sum())} rows (file rows {_row_list(missing)})")
    scores = pd.to_numeric(raw, errors='coerce')
    bad = scores.isna()
    if bad.any():
        example = raw[bad].iloc[0]
        raise DataValidationError(
            f"Non-numeric score {example!r} in {int(bad.sum())} rows (file rows {_row_list(bad)})"
        )
    return scores.astype(float)


def dichotomize(scores: pd.Series, threshold: float) -> np.ndarray:
    """
    1 where score >= threshold, else 0

    Raises:
        DataValidationError: If the threshold lies outside the observed score range
    """
    low, high = float(scores.min()), float(scores.max())
    if not low <= threshold <= high:
        raise DataValidationError(f"Threshold {threshold} outside the observed score range [{low}, {high}]")
    return (scores.to_numpy() >= threshold).astype(np.int8)


def ingest_frame(frame: pd.DataFrame, threshold: float, group_by: Optional[str] = None,
                 source: str = '<frame>') -> Dict[str, RatingDataset]:
    """
    Validate a raw rating table and split it into dichotomised data sets

    Args:
        frame: Table with student, rater, item and score columns
        threshold: Scores at or above it become 1
        group_by: Optional column whose values define separate data sets
        source: Name used in log and error messages

    Returns:
        Datasets keyed by group value (``'all'`` without grouping), in sorted order

    Raises:
        DataValidationError: For missing columns, missing identifiers,
            non-numeric scores, an out-of-range threshold, blank group labels
            or duplicate (student, rater, item) triples
    """
    required = list(RATING_COLUMNS) + ([group_by] if group_by else [])
    missing_columns = [c for c in required if c not in frame.columns]
    if missing_columns:
        raise DataValidationError(f"{source}: missing required columns {missing_columns}; "
                                  f"found {list(frame.columns)}")

    table = frame[required].copy()
    for column in [c for c in required if c != 'score']:
        values = table[column].astype(str).str.strip()
        blank = table[column].isna() | (values == '')
        if blank.any():
            kind = 'group label' if column == group_by else f"{column} identifier"
            raise DataValidationError(f"{source}: empty {kind} in file rows {_row_list(blank)}")
        table[column] = values

    scores = numeric_scores(table)
    table['score'] = dichotomize(scores, threshold)

    if group_by:
        groups = {str(label): part for label, part in table.groupby(group_by, sort=True)}
    else:
        groups = {ALL_GROUP: table}

    datasets = {}
    for label, part in groups.items():
        if part.empty:
            raise DataValidationError(f"{source}: group {label!r} has no ratings")
        try:
            dataset = RatingDataset.from_frame(part)
        except DataValidationError as e:
            raise DataValidationError(f"{source}, group {label!r}: {e}") from e
        datasets[label] = dataset
        summary = dataset.rater_summary()
        logger.info(f"Group {label!r}: {dataset.n_records} ratings, N={dataset.n_students}, "
                    f"R={dataset.n_raters}, I={dataset.n_items}")
        logger.debug(f"Group {label!r} rater counts:\n{summary.to_string(index=False)}")
    return datasets


def ingest(path: str, threshold: float, group_by: Optional[str] = None,
           delimiter: Optional[str] = None) -> Dict[str, RatingDataset]:
    """
    Read a rating file and return one dichotomised data set per group

    Args:
        path: Delimited text (.csv/.tsv/.txt) or Parquet file
        threshold: Scores at or above it become 1
        group_by: Optional grouping column, e.g. ``topic``
        delimiter: ',' or tab; detected when omitted

    Returns:
        Datasets keyed by group value
    """
    path = str(path)
    source = source_for(path)
    kwargs = {'delimiter': delimiter} if isinstance(source, CSVDataSource) else {}
    frame = source.load(path, **kwargs)
    return ingest_frame(frame, threshold, group_by, source=Path(path).name)
