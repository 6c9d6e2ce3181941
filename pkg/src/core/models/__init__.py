"""Rating data models, link functions and parameter sets"""
