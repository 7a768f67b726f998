"""Numerical laboratory for singular non-local fast diffusion on a bounded domain."""

from . import core, evolution, extension, fraclap, harness, holder, profile, properties
from .core import Grid, GridFunction, Params, make_grid, make_params
from .errors import FracFDEError
from .fraclap import FracOp, assemble
from .report import PropertyReport

__all__ = [
    "core", "evolution", "extension", "fraclap", "harness", "holder", "profile", "properties",
    "Grid", "GridFunction", "Params", "make_grid", "make_params", "FracFDEError", "FracOp", "assemble",
    "PropertyReport",
]
__version__ = "0.1.0"
