"""Delimiter-separated rating file source"""
import os
from pathlib import Path
from typing import Optional

import pandas as pd

from src.core.exceptions import DataValidationError
from src.core.interfaces.data_source import IDataSource
from src.core.logging_config import get_logger

logger = get_logger(__name__)

SUPPORTED_DELIMITERS = (',', '\t')


def detect_delimiter(file_path: str, encoding: str = 'utf-8') -> str:
    """
    Choose between comma and tab from the header line

    The delimiter occurring more often in the header wins; ties go to the
    comma unless the file has a .tsv extension.
    """
    with open(file_path, 'r', encoding=encoding, newline='') as handle:
        header = handle.readline()
    tabs, commas = header.count('\t'), header.count(',')
    if tabs > commas or (tabs == commas and file_path.lower().endswith('.tsv')):
        return '\t'
    return ','


class CSVDataSource(IDataSource):
    """Comma- or tab-separated rating files with a header row"""

    def __init__(self):
        """Initialize CSV data source"""
        self._supported_extensions = ['.csv', '.tsv', '.txt']
        logger.debug(f"CSVDataSource initialized with extensions: {self._supported_extensions}")

    def load(self, file_path: str, delimiter: Optional[str] = None, **kwargs) -> pd.DataFrame:
        """
        Load a rating file with every column read as text

        Args:
            file_path: Path to the file
            delimiter: ',' or '\\t'; detected from the header when omitted
            **kwargs: Additional pandas read_csv parameters

        Returns:
            DataFrame of strings; missing cells are NaN

        Raises:
            FileNotFoundError: If file doesn't exist
            DataValidationError: If the format or delimiter is unsupported or parsing fails
        """
        logger.info(f"Loading rating file: {file_path}")
        logger.debug(f"Load parameters: delimiter={delimiter!r}, {kwargs}")

        if not os.path.exists(file_path):
            logger.error(f"File not found: {file_path}")
            raise FileNotFoundError(f"File not found: {file_path}")

        if not self.validate(file_path):
            logger.error(f"Unsupported file format: {file_path}")
            raise DataValidationError(f"Unsupported file format: {file_path}")

        encoding = kwargs.pop('encoding', 'utf-8')
        try:
            if delimiter is None:
                delimiter = detect_delimiter(file_path, encoding)
                logger.debug(f"Detected delimiter {delimiter!r}")
            elif delimiter not in SUPPORTED_DELIMITERS:
                raise DataValidationError(f"Unsupported delimiter {delimiter!r}; use ',' or tab")

            df = pd.read_csv(file_path, sep=delimiter, dtype=str, encoding=encoding,
                             skipinitialspace=True, **kwargs)
            df.columns = [str(c).strip() for c in df.columns]

            if df.empty:
                logger.error(f"Loaded DataFrame is empty from: {file_path}")
                raise DataValidationError(f"No rating rows in {file_path}")

            logger.info(f"Successfully loaded ratings: shape={df.shape}, columns={list(df.columns)}")
            logger.debug(f"Memory usage: {df.memory_usage(deep=True).sum() / 1024:.2f} KB")
            return df

        except DataValidationError:
            raise
        except pd.errors.EmptyDataError as e:
            logger.error(f"Empty data error in file: {file_path}", exc_info=True)
            raise DataValidationError(f"File is empty: {file_path}") from e
        except pd.errors.ParserError as e:
            logger.error(f"Parser error in file: {file_path} - {str(e)}", exc_info=True)
            raise DataValidationError(f"Error parsing {file_path}: {str(e)}") from e
        except UnicodeDecodeError as e:
            logger.error(f"Encoding error in file: {file_path}", exc_info=True)
            raise DataValidationError(f"{file_path} is not valid {encoding}: {str(e)}") from e

    def validate(self, file_path: str) -> bool:
        """
        Validate if the file is a supported delimited text format

        Args:
            file_path: Path to the data file

        Returns:
            True if file extension is supported
        """
        file_ext = Path(file_path).suffix.lower()
        return file_ext in self._supported_extensions

    def get_supported_extensions(self) -> list[str]:
        return self._supported_extensions.copy()
