"""Exception types shared across the package."""


class TwoStrokeError(Exception):
    """Base class for all errors raised by this package."""


class LayoutError(TwoStrokeError):
    """Tensor-factor labels or dimensions do not line up."""


class ParameterError(TwoStrokeError):
    """A scalar argument is outside its admissible domain."""


class SpecError(TwoStrokeError):
    """An engine description (in memory or JSON) is invalid."""


class ConvergenceError(TwoStrokeError):
    """Iterative solver exhausted its budget before reaching tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DegenerateFixedPointError(TwoStrokeError):
    """The cycle channel has a degenerate unit eigenvalue: no unique limit cycle."""


class ConsistencyError(TwoStrokeError):
    """An internal bookkeeping identity failed beyond numerical tolerance."""
