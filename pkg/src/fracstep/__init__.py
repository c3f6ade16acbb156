"""L2-1sigma time stepping on graded meshes for 2D sub-diffusion and
diffusion-wave problems with variable coefficients."""

from .errors import (ConvergenceFailure, MissingPartial, NonMonotoneNodes,
                     NonPositiveWeight, PreconditionError, SolverBreakdown)
from .timegrid import TimeMesh, build_custom, build_graded, validate_ma

__version__ = "0.1.0"

__all__ = [
    "ConvergenceFailure", "MissingPartial", "NonMonotoneNodes", "NonPositiveWeight",
    "PreconditionError", "SolverBreakdown", "TimeMesh", "build_custom", "build_graded",
    "validate_ma",
]
