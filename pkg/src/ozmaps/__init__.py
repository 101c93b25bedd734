"""Numerical toolkit for approximately order-zero maps between finite-dimensional C*-algebras."""
from .algebra import AlgebraShape, AlgElement
from .linmap import LinMap

__version__ = "0.1.0"

__all__ = ["AlgebraShape", "AlgElement", "LinMap", "__version__"]
