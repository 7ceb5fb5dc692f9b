"""Spectral efficiency of full-duplex multi-user MIMO cellular networks."""

__version__ = "0.1.0"
