"""Exception and warning types shared across the package."""


class FcsnError(Exception):
    """Base class for all errors raised by this package."""


class EmptyMaskError(FcsnError):
    """A mask with no foreground pixels where foreground is required."""


class DegenerateContourError(FcsnError):
    """A contour whose geometry cannot support the requested operation."""


class NyquistViolationError(FcsnError):
    """Too few samples for the requested number of harmonics."""


class ShapeMismatchError(FcsnError):
    """Array shapes that were required to agree do not."""


class EmptyDatasetError(FcsnError):
    """An empty collection where at least one element is required."""


class InvalidParameterError(FcsnError):
    """A parameter value outside its documented domain."""


class RejectionLimitError(FcsnError):
    """Rejection sampling failed to produce an admissible draw."""


class NonFiniteLossError(FcsnError):
    """Training encountered a NaN or infinite loss value."""

    def __init__(self, message: str, epoch: int | None = None, step: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step


class DegenerateCurveWarning(UserWarning):
    """A synthesized curve with zero enclosed area was rasterized as empty."""
