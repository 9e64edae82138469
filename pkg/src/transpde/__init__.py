"""Reduction of first-order PDEs on semi-Riemannian manifolds via transnormal functions."""

from .errors import TranspdeError
from .expr import parse
from .profiles import Interval, ProfileFunction, distance_profile

__all__ = ["TranspdeError", "parse", "Interval", "ProfileFunction", "distance_profile"]
__version__ = "0.1.0"
