"""Triangular surface shell elements with strain interpolation into the
tangential-tangential continuous symmetric tensor element space."""

__version__ = "0.1.0"
