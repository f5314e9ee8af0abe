"""A permission-based type checker and interpreter for a small ML-like language."""

__version__ = "0.1.0"
