"""Reliability analysis and group management for DIBR-protected multi-view multicast."""

__version__ = "0.1.0"
