"""
dsge-automl

Evolves classification pipelines with Dynamic Structured Grammatical
Evolution over a pipeline grammar.
"""

__version__ = "1.0.0"
