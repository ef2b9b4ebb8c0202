"""Exception types shared across the package."""


class SkelFuseError(Exception):
    """Base class for all skelfuse errors."""


class BehindCameraError(SkelFuseError):
    """A point with non-positive depth was pushed through the pinhole model."""


class InvalidDepthError(SkelFuseError):
    """A non-positive depth was used for back-projection."""


class OutOfImageError(SkelFuseError):
    """A pixel outside the image bounds was sampled (distinct from missing depth)."""


class FrameMismatchError(SkelFuseError):
    """A skeleton was used in a coordinate frame it is not tagged with."""


class TimeRegressionError(SkelFuseError):
    """A timestamp moved backwards where monotonicity is required."""


class FilterNumericsError(SkelFuseError):
    """A filter covariance lost symmetry/positive-definiteness or a solve failed."""


class ConfigError(SkelFuseError):
    """A scenario / calibration / tracker configuration is invalid."""
