"""Simulation studies for parameter recovery and severity sweeps"""
