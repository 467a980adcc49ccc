"""Spacelike graphs of constant higher-order mean curvature in Minkowski space."""

__version__ = "0.1.0"
