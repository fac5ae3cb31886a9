"""Exception and warning types shared by every geoseg module."""

from __future__ import annotations


class GeosegError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedFormatError(GeosegError):
    """Raster file exists but is not a format we can decode."""


class CorruptImageError(GeosegError):
    """Raster file of a supported format failed to decode."""


class DimensionMismatchError(GeosegError):
    """Two rasters that must share dimensions do not."""


class InvalidParameterError(GeosegError):
    """A numeric or enum parameter is outside its documented range."""


class MissingSeedsError(GeosegError):
    """Scribbles lack at least one class (foreground or background)."""


class DegenerateSeedsError(GeosegError):
    """A seed class has too few samples for the requested color model."""


class DisconnectedGraphError(GeosegError):
    """A superpixel was unreachable from a seed set; the region adjacency
    graph of a connected image is always connected, so this indicates a bug."""


class LengthMismatchError(GeosegError):
    """A per-vertex or per-pixel vector has the wrong length."""


class SingularSystemError(GeosegError):
    """The bilateral-space system has a zero diagonal entry (a vertex with
    no confidence mass and no smoothing coupling)."""


class EmptyDatasetError(GeosegError):
    """Dataset root yielded no usable image/scribble/ground-truth triplets."""


class UnreadableDirectoryError(GeosegError):
    """Dataset root or one of its required subdirectories cannot be read."""


class EmptyGroundTruthError(GeosegError):
    """Ground-truth mask contains no foreground pixels."""


class ConvergenceWarning(UserWarning):
    """An iterative solve hit its iteration cap without meeting tolerance.

    Reported, not fatal: the partial result is still returned.
    """
