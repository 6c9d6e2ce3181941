"""Report tables and output writers"""
