"""gvox - Generative speech coding toolkit."""

__version__ = "0.1.0"
