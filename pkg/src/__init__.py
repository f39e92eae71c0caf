"""wellsep: embedding well-separable graphs into dense host graphs."""

__version__ = "0.1.0"
