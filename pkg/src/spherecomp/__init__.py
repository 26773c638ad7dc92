"""Numerical verification toolkit for a radial-curvature sphere comparison theorem."""

__version__ = "0.1.0"
