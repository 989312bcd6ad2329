"""Exception types shared across the package."""


class PolytopeError(ValueError):
    """A matrix or coordinate vector does not describe a doubly stochastic matrix."""


class BoundaryError(PolytopeError):
    """An operation requiring a strictly interior matrix met a (near-)zero entry."""


class DecompositionError(RuntimeError):
    """No perfect matching exists on the positive support of a residual matrix.

    Should not occur for a valid doubly stochastic matrix above tolerance.
    """


class NotACopulaError(ValueError):
    """A supposed copula violates 2-increasingness beyond tolerance."""


class InvalidMarginError(ValueError):
    """A known-margin CDF returned values outside [0, 1]."""


class DegenerateSampleError(ValueError):
    """A sample has zero variance in a coordinate; smoothing is undefined."""


class ConvergenceError(RuntimeError):
    """An iterative optimizer hit its iteration cap.

    Carries the best iterate found so far in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CSVFormatError(ValueError):
    """A CSV input could not be parsed; the message names the offending line."""

    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
