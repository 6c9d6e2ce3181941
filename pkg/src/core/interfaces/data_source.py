"""Data source interface - Strategy pattern for rating file formats"""
from abc import ABC, abstractmethod
import pandas as pd


class IDataSource(ABC):
    """Interface for rating file readers"""

    @abstractmethod
    def load(self, file_path: str, **kwargs) -> pd.DataFrame:
        """
        Load a rating table

        Args:
            file_path: Path to the data file
            **kwargs: Reader-specific parameters

        Returns:
            pandas DataFrame with one row per rating, identifier columns as strings

        Raises:
            FileNotFoundError: If file doesn't exist
            DataValidationError: If the file cannot be parsed
        """
        pass

    @abstractmethod
    def validate(self, file_path: str) -> bool:
        """
        Validate if the file can be loaded by this data source

        Args:
            file_path: Path to the data file

        Returns:
            True if file is valid for this data source
        """
        pass

    @abstractmethod
    def get_supported_extensions(self) -> list[str]:
        """
        Get list of supported file extensions

        Returns:
            List of file extensions (e.g., ['.csv', '.tsv'])
        """
        pass
