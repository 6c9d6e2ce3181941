"""Capability index, probability model, quadrature and rating validation"""
