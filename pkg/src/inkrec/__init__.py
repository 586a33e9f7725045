"""inkrec: online handwriting stroke recognition and akshara composition."""

__version__ = "0.1.0"
