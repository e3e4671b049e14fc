"""Constructive weighted polynomial approximation with doubling weights."""

__version__ = "0.1.0"
