"""Unit tests for the rater capability toolkit"""
