"""Round-based simulator and verifier for intersection-crossing protocols."""

__version__ = "0.1.0"
