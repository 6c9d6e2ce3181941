"""Figure renderers for capability curves and severity sweeps"""
