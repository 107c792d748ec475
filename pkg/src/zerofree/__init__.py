"""Zero-free regions of quantum partition functions and Barvinok-style interpolation."""

__version__ = "0.1.0"
