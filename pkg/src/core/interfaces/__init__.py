"""Analyzer, data source and renderer interfaces"""
