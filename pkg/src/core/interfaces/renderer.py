"""Renderer interface - Strategy pattern for report figures"""
from abc import ABC, abstractmethod
from typing import Any, Optional, Tuple
import pandas as pd


class RenderConfig:
    """Configuration for rendering"""

    def __init__(self,
                 title: Optional[str] = None,
                 xlabel: Optional[str] = None,
                 ylabel: Optional[str] = None,
                 figsize: Tuple[float, float] = (8.0, 5.0),
                 **kwargs):
        """
        Initialize render configuration

        Args:
            title: Plot title
            xlabel: X-axis label
            ylabel: Y-axis label
            figsize: Figure size in inches (static renderers)
            **kwargs: Additional renderer-specific options
        """
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.figsize = figsize
        self.options = kwargs


class IRenderer(ABC):
    """Interface for figure renderers"""

    @abstractmethod
    def render(self, data: pd.DataFrame, config: RenderConfig, **kwargs) -> Any:
        """
        Render visualization

        Args:
            data: Plot-data table
            config: Rendering configuration
            **kwargs: Renderer-specific parameters

        Returns:
            Figure object of the renderer's backend

        Raises:
            ValueError: If data is invalid for this renderer
        """
        pass

    @abstractmethod
    def validate_data(self, data: pd.DataFrame, **kwargs) -> bool:
        """
        Validate if data is suitable for this renderer

        Args:
            data: DataFrame to validate
            **kwargs: Validation parameters

        Returns:
            True if data is valid
        """
        pass

    @abstractmethod
    def get_renderer_type(self) -> str:
        """
        Get the type of renderer

        Returns:
            String identifier for the renderer type
        """
        pass

    def save(self, figure: Any, path: str) -> None:
        """Write a rendered figure to disk"""
        raise NotImplementedError(f"{type(self).__name__} cannot save figures")
