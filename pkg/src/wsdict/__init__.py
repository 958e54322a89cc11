"""wsdict - implicit dynamic dictionary with the working-set property."""

__version__ = "0.1.0"
