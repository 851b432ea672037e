"""Time-resolved frequency analysis of 2D electronic spectra."""

__version__ = "0.1.0"
