"""Exact and Monte Carlo tools for color-position symmetry in colored ASEP
and stochastic vertex models."""

__version__ = "0.1.0"
