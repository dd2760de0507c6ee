"""Exact superdifferential operators on polynomial supermanifold charts."""

from .algebra import Chart, Parity, Superfunction
from .operators import D1Element, SuperDiffOp, SuperVectorField

__version__ = "0.1.0"

__all__ = ["Chart", "D1Element", "Parity", "Superfunction", "SuperDiffOp", "SuperVectorField"]
