"""Exception hierarchy.

Everything derives from ``ValueError`` so callers that only care about bad
input can catch that; the CLI maps all of these to exit code 2.
"""


class GibbsDiceError(ValueError):
    pass


class InvalidGeometryError(GibbsDiceError):
    """Non-positive or non-finite lengths, or too few resting states."""


class InvalidParameterError(GibbsDiceError):
    """Bad model parameter (negative beta, mismatched dimensions, ...)."""


class DegenerateCellError(GibbsDiceError):
    """A goodness-of-fit cell has zero expected count."""


class DatasetError(GibbsDiceError):
    """Unknown builtin dataset or malformed dataset file."""
