"""Exception hierarchy shared by every module.

All contract violations raise a subclass of :class:`ToolkitError` so callers
(and the CLI) can distinguish domain errors from genuine I/O failures, which
stay plain ``OSError``.
"""


class ToolkitError(Exception):
    """Base class for all domain / contract errors raised by this package."""


class DimensionMismatchError(ToolkitError):
    """Two operands that must share dimensions do not."""


class DecodeError(ToolkitError):
    """Corrupt or unsupported image file."""


class EmptyMaskError(ToolkitError):
    """A binary mask with no set bit where at least one is required."""


class OutOfBoundsError(ToolkitError):
    """A rectangle (or index) extends outside its host image."""


class UndefinedForIdenticalError(ToolkitError):
    """SRE requested for two identical images (zero reconstruction error)."""


class UndefinedZeroMeanError(ToolkitError):
    """SRE requested for a signal image whose mean intensity is zero."""


class WindowTooLargeError(ToolkitError):
    """Sliding window larger than the image it should slide over."""


class TooFewSamplesError(ToolkitError):
    """Feature set too small for covariance estimation."""


class NotSymmetricError(ToolkitError):
    """Matrix expected to be symmetric is not (beyond tolerance)."""


class NegativeEigenvalueError(ToolkitError):
    """Matrix expected to be positive semidefinite has a genuinely negative eigenvalue."""


class InsufficientImagesError(ToolkitError):
    """A class does not hold enough images for the requested draw or split."""


class EmptyDistributionError(ToolkitError):
    """Histogram requested over an empty value multiset."""


class OutOfRangeError(ToolkitError):
    """A scalar argument outside its documented range."""


class EmptyManifestError(ToolkitError):
    """Operation requires a nonempty manifest."""


class InvalidParamError(ToolkitError):
    """Parameter object violates its invariants."""


class EmptyWindowError(ToolkitError):
    """Controller statistic requested before any observation."""


class LengthMismatchError(ToolkitError):
    """Paired sequences of different length."""


class UnknownLabelError(ToolkitError):
    """Class label outside the declared label set."""


class EmptyMatrixError(ToolkitError):
    """Confusion matrix with zero total count."""


class SingularCovarianceError(ToolkitError):
    """Marginal-homogeneity covariance matrix singular after degenerate
    categories were removed; the test statistic is not computable."""


class InvalidInputError(ToolkitError):
    """Numeric argument outside the function domain."""


class ParseError(ToolkitError):
    """Malformed manifest or data file; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FeatureFileError(ToolkitError):
    """Malformed feature-vector interchange file."""
