"""Reconstruction from weighted ray transforms by reduction to weighted Radon transforms.

Ray data measured slice by slice are rebinned into plane integrals and
inverted in 3D with Chang-type and Kunyansky-type methods.
"""

from .errors import ConvergenceError, DataFormatError, DegenerateWeightError, NumericalError, WrtkitError
from .grids import CartesianGrid, PlaneGrid, RayGrid, build_plane_grid, build_ray_grid

__version__ = "0.1.0"

__all__ = [
    "CartesianGrid",
    "ConvergenceError",
    "DataFormatError",
    "DegenerateWeightError",
    "NumericalError",
    "PlaneGrid",
    "RayGrid",
    "WrtkitError",
    "build_plane_grid",
    "build_ray_grid",
]
