"""Syzygy - planar three-body eclipse laboratory on the shape sphere."""

__version__ = "0.1.0"
