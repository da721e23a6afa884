"""Numerical laboratory for the competing bi-virus SIS model on two overlaid graphs."""

__version__ = "0.1.0"
