"""Distorted Fourier analysis and near-soliton solution construction for
co-rotational wave maps into the sphere."""

__version__ = "0.1.0"
