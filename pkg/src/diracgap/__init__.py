"""Finite element verification of spectral gap bounds for 2D Dirac operators."""

__version__ = "0.1.0"
