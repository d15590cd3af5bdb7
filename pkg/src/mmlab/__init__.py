"""Deviation measures, mm-boundary/mm-curvature profiles and Liouville checks on model surfaces."""

__version__ = "0.1.0"
