"""Exception types shared across the package."""


class PhotoscoreError(Exception):
    """Base class for domain errors (bad data, degenerate inputs)."""


class ManifestError(PhotoscoreError):
    """Raised when a manifest file is missing or contains invalid records."""


class FormulaError(PhotoscoreError):
    """Raised on model-formula syntax or semantic errors.

    `offset` is the byte offset of the problem within the formula text.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class SegmentationError(PhotoscoreError):
    """Raised when segmentation cannot run (e.g. no background seed)."""


class FitError(PhotoscoreError):
    """Raised when a regression cannot be set up (missing class, n <= k)."""
