"""Exception and warning types shared across the package."""

from __future__ import annotations


class AnnotweaveError(Exception):
    """Base class for all errors raised by annotweave."""


# --- object model ---------------------------------------------------------

class IdSpaceExhausted(AnnotweaveError):
    """No legal object ID is left for this project's geometry kind."""


# --- mask engine ----------------------------------------------------------

class DegenerateRect(AnnotweaveError):
    """GrabCut rectangle has (near) zero area or lies outside the image."""


class EmptyMask(AnnotweaveError):
    """Operation requires at least one object pixel."""


class OverlappingObjects(AnnotweaveError):
    """Two object masks claim the same pixels in one ID image."""

    def __init__(self, pixel_count: int):
        super().__init__(f"object masks overlap on {pixel_count} pixel(s)")
        self.pixel_count = pixel_count


class UnknownId(AnnotweaveError):
    """ID image contains a value outside the expected ID list."""


class ReservedId(AnnotweaveError):
    """Object ID falls in a range reserved by the pixel-mask encoding."""


# --- sequence engine ------------------------------------------------------

class MissingKeyframe(AnnotweaveError):
    """Interpolation endpoint frame has no box for the requested ID."""


class NotBoxGeometry(AnnotweaveError):
    """Operation is only defined for box-geometry annotations."""


class SameId(AnnotweaveError):
    """Merge requires two distinct object IDs."""


# --- registration ---------------------------------------------------------

class PointAtInfinity(AnnotweaveError):
    """Homogeneous w coordinate vanished while mapping a point."""


class OutOfView(AnnotweaveError):
    """Mapped box lies entirely outside the target image."""


class MissingKey(AnnotweaveError):
    """Homography file lacks a required matrix key."""


class MalformedMatrix(AnnotweaveError):
    """Matrix entry does not describe a 3x3 layout."""


class SingularMatrix(AnnotweaveError):
    """Homography matrix is not invertible."""


# --- storage --------------------------------------------------------------

class CorruptCsv(AnnotweaveError):
    """Annotation CSV could not be parsed."""

    def __init__(self, message: str, line: int, column: str | None = None):
        loc = f"line {line}" + (f", column {column!r}" if column else "")
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.column = column


class BadPattern(AnnotweaveError):
    """File pattern is neither a valid regex nor a glob."""


class DuplicateName(AnnotweaveError):
    """Name list contains a repeated entry."""


class FieldInUse(AnnotweaveError):
    """Meta field removal needs confirmation while objects still carry it."""


class IoFailure(AnnotweaveError):
    """Underlying file operation failed."""


class ProjectLocked(AnnotweaveError):
    """Another writer holds the project root."""


# --- exporters ------------------------------------------------------------

class EmptyCategoryList(AnnotweaveError):
    """Export needs at least one category name."""


# --- warnings -------------------------------------------------------------

class AnnotweaveWarning(UserWarning):
    """Base class for recoverable conditions worth surfacing."""


class NoMatchesWarning(AnnotweaveWarning):
    """Frame scan matched no files."""


class DegeneratePolygonWarning(AnnotweaveWarning):
    """Polygon rasterized to an empty mask."""


class ConflictingBrushWarning(AnnotweaveWarning):
    """A pixel received both a positive and a negative brush."""


class ReservedValueWarning(AnnotweaveWarning):
    """ID image contains values from the internally reserved range."""


class DerivedHomographyWarning(AnnotweaveWarning):
    """One homography direction was derived by inverting the other."""


class EmptyCategoryFileWarning(AnnotweaveWarning):
    """A category list file contained no entries and was skipped."""
