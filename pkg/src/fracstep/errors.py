"""Exception types raised across the package."""


class FracstepError(Exception):
    pass


class NonMonotoneNodes(FracstepError, ValueError):
    """Time nodes are not strictly increasing (or do not start at 0)."""


class PreconditionError(FracstepError, ValueError):
    """Inputs violate a documented precondition (distinct from a failed check)."""


class ConvergenceFailure(FracstepError, RuntimeError):
    """An iterative construction did not reach its target accuracy."""


class MissingPartial(FracstepError, LookupError):
    """A coefficient partial derivative is needed but unavailable."""


class NonPositiveWeight(FracstepError, ValueError):
    """An auxiliary weight field p, p1 or p2 was sampled non-positive."""


class SolverBreakdown(FracstepError, RuntimeError):
    def __init__(self, message, iterations=None, residual=None, step=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.step = step

    def __str__(self):
        parts = [super().__str__()]
        if self.step is not None:
            parts.append(f"step={self.step}")
        if self.iterations is not None:
            parts.append(f"iterations={self.iterations}")
        if self.residual is not None:
            parts.append(f"residual={self.residual:.3e}")
        return " ".join(parts)
