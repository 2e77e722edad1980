"""Exception types shared across the package."""


class TailpredictError(Exception):
    """Base class for numeric and statistical failures raised by this package."""


class DegenerateError(TailpredictError):
    """Input data or a derived object is degenerate (no tail mass, zero spread, ...)."""


class ConvergenceError(TailpredictError):
    """An iterative procedure exhausted its iteration/restart budget."""


class FitError(TailpredictError):
    """A statistical estimate cannot be formed from the data provided."""


class SolveError(TailpredictError):
    """A linear system is singular or too ill-conditioned to solve reliably."""
