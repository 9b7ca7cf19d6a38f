"""Subject-preserving horizontal-to-vertical video conversion toolkit."""

__version__ = "0.1.0"
