"""CAPFI - context-aware permutation feature importance for crossing-intention models."""

__version__ = "0.1.0"
__author__ = "CAPFI Team"
__license__ = "MIT"

__all__ = ["__version__"]
