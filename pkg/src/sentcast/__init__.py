"""News-sentiment indicators and real-time macro forecast evaluation."""

__version__ = "0.1.0"
