"""Sets with a surjective image under one linear form and a small image under another, over finite Z-modules."""

__version__ = "0.1.0"
