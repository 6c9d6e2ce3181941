"""Parquet rating file source"""
import os
from pathlib import Path

import pandas as pd

from src.core.exceptions import DataValidationError
from src.core.interfaces.data_source import IDataSource
from src.core.logging_config import get_logger

logger = get_logger(__name__)


class ParquetDataSource(IDataSource):
    """Parquet rating tables read through pyarrow"""

    def __init__(self):
        self._supported_extensions = ['.parquet', '.pq']
        logger.debug(f"ParquetDataSource initialized with extensions: {self._supported_extensions}")

    def load(self, file_path: str, **kwargs) -> pd.DataFrame:
        """
        Load a rating table; columns other than ``score`` are converted to text

        Args:
            file_path: Path to Parquet file
            **kwargs: Additional pandas read_parquet parameters

        Returns:
            DataFrame with string identifier columns; missing cells stay NaN

        Raises:
            FileNotFoundError: If file doesn't exist
            DataValidationError: If the file cannot be read
        """
        logger.info(f"Loading Parquet rating table: {file_path}")

        if not os.path.exists(file_path):
            logger.error(f"File not found: {file_path}")
            raise FileNotFoundError(f"File not found: {file_path}")

        if not self.validate(file_path):
            logger.error(f"Unsupported file format: {file_path}")
            raise DataValidationError(f"Unsupported file format: {file_path}")

        kwargs.pop('delimiter', None)
        try:
            df = pd.read_parquet(file_path, engine='pyarrow', **kwargs)
        except (OSError, ValueError) as e:
            logger.error(f"Error loading Parquet file: {file_path} - {str(e)}", exc_info=True)
            raise DataValidationError(f"Error loading Parquet file {file_path}: {str(e)}") from e

        if df.empty:
            logger.error(f"Loaded DataFrame is empty from: {file_path}")
            raise DataValidationError(f"No rating rows in {file_path}")

        for column in df.columns:
            if column != 'score':
                df[column] = df[column].where(df[column].isna(), df[column].astype(str))
        logger.info(f"Successfully loaded Parquet: shape={df.shape}, columns={list(df.columns)}")
        return df

    def validate(self, file_path: str) -> bool:
        return Path(file_path).suffix.lower() in self._supported_extensions

    def get_supported_extensions(self) -> list[str]:
        return self._supported_extensions.copy()
