"""End-to-end pipelines"""
