"""Readers for delimited and Parquet rating files"""
