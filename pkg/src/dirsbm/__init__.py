"""Dirichlet stochastic block model for composition-weighted networks."""

__version__ = "0.1.0"
