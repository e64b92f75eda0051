"""Robust instability radius analysis for SISO rational transfer functions."""

__version__ = "0.1.0"
