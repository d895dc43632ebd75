"""Exception types raised across the package."""


class DensecellError(Exception):
    """Base class for every error raised by densecell."""


class DomainError(DensecellError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConstructionError(DensecellError, ValueError):
    """A model or configuration violates one of its invariants."""


class AccuracyError(DensecellError, ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before converging.

    The best estimate and its error bound are kept so callers can decide
    whether the partial result is usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NumericalInstabilityError(AccuracyError):
    """A probability computed from a recursion left [0, 1] by more than round-off."""


class ShapeError(DensecellError, RuntimeError):
    """A sampled throughput profile is not unimodal, so no single peak exists."""

    def __init__(self, message, grid=None, values=None):
        super().__init__(message)
        self.grid = grid
        self.values = values
