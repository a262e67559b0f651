"""Exception hierarchy shared by all campro modules."""


class CamproError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(CamproError, ValueError):
    """Raster or tensor dimensions do not line up."""

    def __init__(self, message, stage=None):
        self.stage = stage
        if stage:
            message = f"[{stage}] {message}"
        super().__init__(message)


class InvalidKernelError(CamproError, ValueError):
    pass


class InvalidThresholdError(CamproError, ValueError):
    pass


class InvalidRangeError(CamproError, ValueError):
    pass


class EmptyTargetError(CamproError, ValueError):
    """A mask that must contain foreground is empty."""


class EmptyInputError(CamproError, ValueError):
    pass


class UndefinedMetricError(CamproError, ValueError):
    """The metric has no defined value for this pair (e.g. empty GT)."""


class EmptyReportError(CamproError, ValueError):
    pass


class FormatError(CamproError, ValueError):
    """An array file does not follow the NPY v1.0 layout we support."""


class TruncatedDataError(FormatError):
    def __init__(self, path, expected, actual):
        self.path = path
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{path}: truncated data section, expected {expected} bytes, got {actual}"
        )


class ManifestError(CamproError, ValueError):
    """Dataset directories do not pair up by stem."""
