"""Spatially resolved global sensitivity analysis for simulation ensembles."""

__version__ = "0.1.0"
