"""Lane identification from vertical acceleration recorded while driving."""

__version__ = "0.1.0"
