"""Quasi-Fefferman metrics over 3-dimensional CR structures and their curvature."""

__version__ = "0.1.0"
