"""Fractional Sobolev norms and path lengths on diffeomorphism groups."""

__version__ = "0.1.0"
