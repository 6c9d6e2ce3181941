"""Rating file ingestion"""
