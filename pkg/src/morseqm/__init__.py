"""Morse-boundary experiments on model geodesic spaces."""

__version__ = "0.1.0"
