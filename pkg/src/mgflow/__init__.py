"""Numerical magnetic-geodesic heat flow of closed curves on model surfaces."""

__version__ = "0.1.0"
