"""Spectral simulation and verification toolkit for the generalized Benjamin-Ono equation."""

__version__ = "0.1.0"
