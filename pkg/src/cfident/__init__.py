"""Identifiability of semi-blind estimation in PPP cell-free networks."""

__version__ = "0.1.0"
