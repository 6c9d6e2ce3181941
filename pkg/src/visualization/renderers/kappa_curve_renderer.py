"""Capability curve renderer: kappa(theta) per rater"""
import pandas as pd
from matplotlib.figure import Figure
from typing import Optional
from src.core.interfaces.renderer import IRenderer, RenderConfig
from src.core.interfaces.analyzer import AnalysisResult
from src.reporting.writers import atomic_path


class KappaCurveRenderer(IRenderer):
    """
    Static renderer for capability curves
    One line per rater over the natural ability scale, kappa_bar in the legend
    """

    REQUIRED_COLUMNS = ['rater', 'theta', 'kappa']

    def __init__(self):
        """Initialize capability curve renderer"""
        self._renderer_type = "kappa_curve"

    def render(self,
               data: pd.DataFrame,
               config: RenderConfig,
               analysis_result: Optional[AnalysisResult] = None,
               **kwargs) -> Figure:
        """
        Render capability curves

        Args:
            data: Curve table with rater, theta and kappa columns
            config: Rendering configuration
            analysis_result: Optional CapabilityAnalyzer result; its table
                             adds kappa_bar to the legend labels
            **kwargs: Additional parameters
                - raters: Subset of raters to draw
                - line_width: Line width (default: 1.5)

        Returns:
            Matplotlib Figure object

        Raises:
            ValueError: If data is invalid
        """
        if not self.validate_data(data, **kwargs):
            raise ValueError("Curve data needs rater, theta and kappa columns")

        raters = kwargs.get('raters') or sorted(data['rater'].unique())
        kappa_bar = {}
        if analysis_result is not None:
            table = analysis_result.get_metric('table')
            if table is not None:
                kappa_bar = dict(zip(table['rater'], table['kappa_bar']))

        fig = Figure(figsize=config.figsize, dpi=100)
        ax = fig.add_subplot(111)
        line_width = kwargs.get('line_width', 1.5)
        for rater in raters:
            curve = data[data['rater'] == rater].sort_values('theta')
            label = str(rater)
            if rater in kappa_bar:
                label += f" (kappa_bar = {kappa_bar[rater]:.2f})"
            ax.plot(curve['theta'], curve['kappa'], linewidth=line_width, label=label)

        ax.set_xlabel(config.xlabel or 'theta', fontsize=11, fontweight='bold')
        ax.set_ylabel(config.ylabel or 'kappa', fontsize=11, fontweight='bold')
        ax.set_title(config.title or 'Rater capability curves', fontsize=13, fontweight='bold', pad=15)
        ax.grid(True, alpha=0.3, linestyle='--', linewidth=0.5)
        if len(raters) <= config.options.get('max_legend_entries', 20):
            ax.legend(loc='best', framealpha=0.9, fontsize=8)
        fig.tight_layout()
        return fig

    def save(self, figure: Figure, path: str) -> None:
        with atomic_path(path) as temporary:
            figure.savefig(temporary, format='png')

    def validate_data(self, data: pd.DataFrame, **kwargs) -> bool:
        if data is None or data.empty:
            return False
        if any(column not in data.columns for column in self.REQUIRED_COLUMNS):
            return False
        return all(pd.api.types.is_numeric_dtype(data[c]) for c in ('theta', 'kappa'))

    def get_renderer_type(self) -> str:
        return self._renderer_type
