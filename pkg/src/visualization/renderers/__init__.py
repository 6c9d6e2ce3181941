"""Renderer implementations: matplotlib curves, Plotly sweeps"""
