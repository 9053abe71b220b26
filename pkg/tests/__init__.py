"""
Unit tests for dsge-automl.
"""
