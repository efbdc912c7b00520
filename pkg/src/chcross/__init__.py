"""Finite elements for a stabilized Cahn-Hilliard cross-diffusion scheme."""

from .errors import ArgumentError, DataError, SolverError, StepError
from .mesh import Mesh, NodalFunction, build_rect_mesh, interpolate_nodal, transfer_to_mesh
from .potential import Potential
from .stepper import SchemeParams, State, advance, initial_state, run, validate_params

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "DataError",
    "SolverError",
    "StepError",
    "Mesh",
    "NodalFunction",
    "build_rect_mesh",
    "interpolate_nodal",
    "transfer_to_mesh",
    "Potential",
    "SchemeParams",
    "State",
    "advance",
    "initial_state",
    "run",
    "validate_params",
]
