"""Two-phase channel flow solver."""

__version__ = "0.1.0"
