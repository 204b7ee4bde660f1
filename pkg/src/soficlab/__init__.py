"""Finite-scale permutation statistics for sofic approximations."""

__version__ = "0.1.0"
