"""Hierarchical-likelihood estimation of the rater models"""
