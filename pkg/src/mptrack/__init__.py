"""Homotopy path tracking with adaptive step size and adaptive precision."""

__version__ = "0.1.0"
