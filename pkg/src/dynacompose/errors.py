"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit status without a lookup table.
"""


class DynacomposeError(Exception):
    exit_code = 2


class DataError(DynacomposeError, ValueError):
    """Invalid or inconsistent input data."""

    exit_code = 2


class DimensionMismatch(DataError):
    pass


class NonMonotonicIndices(DataError):
    pass


class MissingTarget(DataError):
    pass


class InvalidValue(DataError):
    pass


class FileMissing(DataError, FileNotFoundError):
    pass


class MalformedHeader(DataError):
    pass


class UnsupportedMaxVal(DataError):
    pass


class IoFailure(DataError, OSError):
    pass


class DimensionTooSmall(DataError):
    pass


class MaskCoversFrame(DataError):
    pass


class EmptyMask(DataError):
    pass


class EmptyRegion(DataError):
    pass


class DegenerateBounds(DataError):
    pass


class ZeroWeights(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class InsufficientEntries(DataError):
    pass


class NonPositiveMax(DataError):
    pass


class DegenerateX(DataError):
    pass


class DegenerateSamples(DataError):
    pass


class VideoTooShort(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class BudgetTooSmall(DataError):
    pass


class HistoryTooShort(DataError):
    pass


class AdapterError(DynacomposeError, RuntimeError):
    """The inpainter backend failed."""

    exit_code = 3


class InpainterFailure(AdapterError):
    pass


class ProcessFailure(AdapterError):
    pass


class AdapterTimeout(AdapterError, TimeoutError):
    pass


class NoSourcePixels(UserWarning):
    """Issued when a hole could only be filled by diffusion."""
