"""Exception hierarchy shared by every stage."""


class PectoralError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(PectoralError, ValueError):
    pass


class EmptyRegionError(PectoralError, ValueError):
    pass


class DegenerateHistogramError(PectoralError, ValueError):
    """Fewer than two occupied bins; no threshold can split the data."""


class DegenerateWindowError(PectoralError, ValueError):
    """The windowing bounds collapse onto one intensity."""


class ImageFormatError(PectoralError):
    """Unsupported or malformed image file."""


class TruncatedImageError(ImageFormatError):
    """Header is valid but the pixel payload is short."""


class BitDepthError(ImageFormatError):
    """Samples wider than 16 bits."""


class ColorImageError(ImageFormatError):
    """Multi-channel input; mammograms are single channel and are never converted."""


class InvalidSpecError(PectoralError, ValueError):
    """A phantom or suite description that cannot be realized."""


class StageError(PectoralError):
    """Wraps a failure inside the pipeline with the name of the stage."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
