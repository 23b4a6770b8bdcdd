"""Euler-characteristic thresholds for cone-alternative statistic fields."""

__version__ = "0.1.0"
