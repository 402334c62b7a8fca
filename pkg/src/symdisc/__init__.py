"""Unambiguous discrimination of symmetric states: math, optics, Monte Carlo."""

__version__ = "0.1.0"
