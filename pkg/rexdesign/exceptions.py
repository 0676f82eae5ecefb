class OptimalDesignError(Exception):
    """Base class for errors raised while building or solving a design problem."""

    pass


class RankDeficientError(OptimalDesignError):
    """Raised when the regressors of a design space do not span the full regressor dimension."""

    pass


class SpanFailureError(RankDeficientError):
    """Raised when the points passed to the ellipsoid solver do not span their space."""

    pass


class SingularDesignError(OptimalDesignError):
    """Raised when a design has a singular or ill-conditioned information matrix."""

    pass


class StepOutOfRangeError(OptimalDesignError):
    """Raised when an exchange step falls outside the feasible interval [-w_v, w_u]."""

    pass


class NumericalBreakdownError(OptimalDesignError):
    """Raised when a rank-one update would divide by a vanishing determinant factor."""

    pass


class NumericalAnomalyError(OptimalDesignError):
    """Raised when a quantity that is non-negative in exact arithmetic is clearly negative."""

    pass


class NotSPDError(OptimalDesignError):
    """Raised when a matrix that must be symmetric positive definite is not."""

    pass


class NoRegularStartError(OptimalDesignError):
    """Raised when no regular initial design could be sampled."""

    pass


class SizeOverflowError(OptimalDesignError):
    """Raised when a generated design space would exceed the configured size cap."""

    pass


class InputError(OptimalDesignError):
    """Raised when an input file cannot be parsed or has the wrong shape."""

    pass


class NumericalWarning(RuntimeWarning):
    """Warns about a recovered numerical event, such as a refresh after an update breakdown."""

    pass


class BenchmarkWarning(RuntimeWarning):
    """Warns about a benchmark run that failed and was recorded without a result."""

    pass
