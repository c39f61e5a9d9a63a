"""Counterattack detection, graph-based success prediction, and what-if
analysis for soccer tracking data."""

__version__ = "0.1.0"
