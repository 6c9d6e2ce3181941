"""Rater capability index toolkit - estimation, simulation and reporting"""
__version__ = "1.0.0"
