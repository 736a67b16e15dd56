"""Retrieval-augmented pseudo molecule-description pair generation and evaluation."""

__version__ = "0.1.0"
