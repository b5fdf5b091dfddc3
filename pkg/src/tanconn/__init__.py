"""Connections in tangent categories, computed over iterated tangent towers of R^n."""
from .errors import TanconnError
from .program import Program, load, load_file

__version__ = "0.1.0"

__all__ = ["Program", "TanconnError", "__version__", "load", "load_file"]
