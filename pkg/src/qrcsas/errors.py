"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Array has the wrong shape or fails a structural requirement."""


class SingularMatrixError(ArithmeticError):
    """Elimination hit a pivot below the singularity floor."""

    def __init__(self, pivot_index, pivot_value, message=None):
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        super().__init__(
            message
            or f"matrix is numerically singular at pivot {pivot_index} (|pivot| = {pivot_value:.3e})"
        )


class NoFixedPointError(SingularMatrixError):
    """I - p(z) is singular, so the constant-input fixed point is not unique."""


class ChannelError(ValueError):
    """A linear map is not trace preserving or otherwise not a valid channel."""


class EspViolationError(ValueError):
    """The contraction margin of p(z) is not positive on the inputs used."""


class DegenerateCapacityError(ValueError):
    """Memory capacity is undefined because a sequence has zero variance."""


class NonFiniteError(ArithmeticError):
    """A finite-difference evaluation produced NaN or infinity."""

    def __init__(self, coordinate, message=None):
        self.coordinate = coordinate
        super().__init__(message or f"non-finite value while differentiating along input coordinate {coordinate}")
