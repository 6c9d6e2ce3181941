"""Configuration, errors, logging, interfaces and the rating-model types"""
