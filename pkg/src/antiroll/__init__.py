"""Data-driven predictive rollover prevention toolkit."""

__version__ = "0.1.0"
