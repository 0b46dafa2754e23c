"""Numerical analysis of linear control systems on matrix Lie groups."""

__version__ = "0.1.0"

from lcs.tolerances import Tolerances, DEFAULT_TOL
from lcs.algebra import LieAlgebraSpec, Subspace
from lcs import catalog

__all__ = ["Tolerances", "DEFAULT_TOL", "LieAlgebraSpec", "Subspace", "catalog", "__version__"]
