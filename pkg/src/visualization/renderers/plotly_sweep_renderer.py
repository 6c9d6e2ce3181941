"""Interactive severity-sweep renderer using Plotly"""
import pandas as pd
import plotly.graph_objects as go
from src.core.interfaces.renderer import IRenderer, RenderConfig
from src.reporting.writers import atomic_path


class PlotlySweepRenderer(IRenderer):
    """
    Interactive renderer for kappa_bar against rater severity
    Median estimate with its inter-quartile band and the true-parameter curve
    """

    REQUIRED_COLUMNS = ['rater', 'eta', 'kappa_bar_true', 'kappa_bar_median', 'q25', 'q75']

    def __init__(self):
        """Initialize Plotly sweep renderer"""
        self._renderer_type = "plotly_sweep"

    def render(self, data: pd.DataFrame, config: RenderConfig, **kwargs) -> go.Figure:
        """
        Render the severity sweep

        Args:
            data: Sweep table
            config: Rendering configuration
            **kwargs: Additional parameters
                - group: Only draw rows of this group
                - show_band: Draw the inter-quartile band (default: True)

        Returns:
            Plotly Figure object

        Raises:
            ValueError: If data is invalid
        """
        if not self.validate_data(data, **kwargs):
            raise ValueError("Invalid data for sweep plot")

        group = kwargs.get('group')
        if group is not None and 'group' in data.columns:
            data = data[data['group'] == group]
        show_band = kwargs.get('show_band', True)

        fig = go.Figure()
        for rater, curve in data.groupby('rater', sort=True):
            curve = curve.sort_values('eta')
            if show_band:
                fig.add_trace(go.Scatter(
                    x=pd.concat([curve['eta'], curve['eta'][::-1]]),
                    y=pd.concat([curve['q75'], curve['q25'][::-1]]),
                    fill='toself',
                    opacity=0.2,
                    line=dict(width=0),
                    name=f'{rater} IQR',
                    hoverinfo='skip',
                    showlegend=False,
                ))
            fig.add_trace(go.Scatter(
                x=curve['eta'],
                y=curve['kappa_bar_median'],
                mode='lines+markers',
                name=f'{rater} median',
                hovertemplate='eta: %{x:.2f}<br>kappa_bar: %{y:.3f}<extra></extra>',
            ))
            fig.add_trace(go.Scatter(
                x=curve['eta'],
                y=curve['kappa_bar_true'],
                mode='lines',
                line=dict(dash='dash'),
                name=f'{rater} true',
            ))

        fig.update_layout(
            title=dict(text=config.title or 'kappa_bar against rater severity',
                       font=dict(size=16, family='Arial, sans-serif')),
            xaxis_title=config.xlabel or 'eta',
            yaxis_title=config.ylabel or 'kappa_bar',
            hovermode='closest',
            template='plotly_white',
            width=900,
            height=600,
            margin=dict(l=80, r=80, t=100, b=80)
        )
        fig.update_xaxes(showgrid=True, gridwidth=1, gridcolor='lightgray')
        fig.update_yaxes(showgrid=True, gridwidth=1, gridcolor='lightgray', range=[0, 1.05])
        return fig

    def save(self, figure: go.Figure, path: str) -> None:
        with atomic_path(path) as temporary:
            figure.write_html(str(temporary), include_plotlyjs='cdn', full_html=True)

    def validate_data(self, data: pd.DataFrame, **kwargs) -> bool:
        if data is None or data.empty:
            return False
        if any(column not in data.columns for column in self.REQUIRED_COLUMNS):
            return False
        return all(pd.api.types.is_numeric_dtype(data[c]) for c in self.REQUIRED_COLUMNS[1:])

    def get_renderer_type(self) -> str:
        return self._renderer_type
