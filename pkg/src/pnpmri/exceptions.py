"""Exception types raised across the package."""


class DimensionMismatchError(ValueError):
    """Array shapes of two inputs do not agree."""


class InsufficientAcsError(ValueError):
    """The autocalibration block is too small or carries no signal."""


class EmptyDatasetError(ValueError):
    """A training routine received no examples."""


class GeometryError(ValueError):
    """A sampling mask and a kernel geometry are incompatible."""
