"""Collaborative two-person motion prediction with cross-interaction attention."""

__version__ = "0.1.0"
