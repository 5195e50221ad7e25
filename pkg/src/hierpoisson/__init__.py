"""Numerical laboratory for Poisson statistics in the hierarchical Anderson model."""

__version__ = "0.1.0"
