"""Exception types raised across the package.

All derive from ``ValueError`` so callers that only care about bad input can
catch that.
"""


class UnsupportedDegreeError(ValueError):
    pass


class UnsupportedSizeError(ValueError):
    pass


class DomainError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class EquatorError(ValueError):
    """A point or direction sits on (or too near) the equator u_{q+1} = 0."""


class KernelNullspaceError(ValueError):
    def __init__(self, degree, mass):
        super().__init__(
            f"coefficient mass {mass:.3e} at degree {degree}, where the |u.v| "
            "kernel eigenvalue is numerically zero"
        )
        self.degree = degree
        self.mass = mass


class NonFiniteError(ValueError):
    def __init__(self, point, value):
        super().__init__(f"non-finite value {value!r} at sample point {list(point)!r}")
        self.point = point
        self.value = value


class BoxTooSmallError(ValueError):
    def __init__(self, index, tail):
        super().__init__(
            f"grid box too small: Mehler tail for index {index} is {tail:.3e}"
        )
        self.index = index
        self.tail = tail


class SizeError(ValueError):
    def __init__(self, count, cap):
        super().__init__(f"{count} points exceeds the configured cap {cap}")
        self.count = count
        self.cap = cap


class UndefinedRatioError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class IncompleteDataError(ValueError):
    pass


class ExactRepresentationError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class StepError(ValueError):
    """A failure inside one step of a larger job (a sweep point, a DAG node)."""

    def __init__(self, where, cause):
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")
        self.where = where
        self.cause = cause
