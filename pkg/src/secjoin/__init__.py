"""Two-party secure join views and group-aggregation over additive shares."""

__version__ = "0.1.0"
