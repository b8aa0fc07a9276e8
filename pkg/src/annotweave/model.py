"""Annotation domain types and their validity rules.

Every other module operates on the values defined here. All types are
immutable (or treated as such); operations return new values instead of
mutating, so they are safe to copy between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import IdSpaceExhausted

# Pixel-geometry projects encode object IDs into 8-bit mask images, which
# limits IDs to [11, 255]: values 0..10 are reserved for internal use and
# 170 marks don't-care borders. Box-geometry projects take any ID >= 0.
PIXEL_ID_MIN = 11
PIXEL_ID_MAX = 255
DONTCARE_VALUE = 170
RESERVED_INTERNAL_IDS = frozenset(range(0, PIXEL_ID_MIN))

LEGAL_PIXEL_IDS = tuple(
    i for i in range(PIXEL_ID_MIN, PIXEL_ID_MAX + 1) if i != DONTCARE_VALUE
)


class ObjectStatus(Enum):
    """Lifecycle flag: LAST_FRAME_REACHED objects are never retained forward."""

    ACTIVE = "active"
    LAST_FRAME_REACHED = "lastframe"


class GeometryKind(Enum):
    BOX = "box"
    PIXEL = "pixel"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in master (RGB) pixel coordinates.

    The box is half-open: the upper-left corner is inclusive, the
    lower-right corner exclusive, so width == lr_x - ul_x. (The legacy
    CSV on disk stores an inclusive lower-right pixel; storage converts.)
    """

    ul_x: int
    ul_y: int
    lr_x: int
    lr_y: int

    def __post_init__(self):
        if not (self.ul_x < self.lr_x and self.ul_y < self.lr_y):
            raise ValueError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.ul_x, self.ul_y, self.lr_x, self.lr_y)

    @property
    def width(self) -> int:
        return self.lr_x - self.ul_x

    @property
    def height(self) -> int:
        return self.lr_y - self.ul_y

    @property
    def area(self) -> int:
        return self.width * self.height

    def corners(self) -> tuple[tuple[float, float], ...]:
        """Geometric corner points of the covered region."""
        return (
            (float(self.ul_x), float(self.ul_y)),
            (float(self.lr_x), float(self.ul_y)),
            (float(self.lr_x), float(self.lr_y)),
            (float(self.ul_x), float(self.lr_y)),
        )

    def union(self, other: "BoundingBox") -> "BoundingBox":
        return BoundingBox(
            min(self.ul_x, other.ul_x),
            min(self.ul_y, other.ul_y),
            max(self.lr_x, other.lr_x),
            max(self.lr_y, other.lr_y),
        )

    def clip(self, width: int, height: int) -> Optional["BoundingBox"]:
        """Clip to the image rectangle; None when nothing remains."""
        ul_x, ul_y = max(self.ul_x, 0), max(self.ul_y, 0)
        lr_x, lr_y = min(self.lr_x, width), min(self.lr_y, height)
        if ul_x >= lr_x or ul_y >= lr_y:
            return None
        return BoundingBox(ul_x, ul_y, lr_x, lr_y)

    def intersects_image(self, width: int, height: int) -> bool:
        return self.clip(width, height) is not None


@dataclass(frozen=True)
class Polygon:
    """Closed contour given by >= 3 ordered vertices in pixel coordinates."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 3:
            raise ValueError("polygon needs at least 3 points")
        for a, b in zip(pts, pts[1:] + pts[:1]):
            if a == b and len(pts) > 1:
                raise ValueError(f"consecutive duplicate point {a}")

    def bounds(self) -> BoundingBox:
        """Tightest integer box containing the whole contour."""
        import math

        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        ul_x, ul_y = math.floor(min(xs)), math.floor(min(ys))
        lr_x, lr_y = math.ceil(max(xs)), math.ceil(max(ys))
        return BoundingBox(ul_x, ul_y, max(lr_x, ul_x + 1), max(lr_y, ul_y + 1))


def _frozen_bool_raster(bits: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(bits, dtype=bool))
    if arr.ndim != 2:
        raise ValueError(f"raster must be 2-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class PixelMask:
    """Binary object raster plus a disjoint don't-care border band.

    Both rasters share shape (height, width) equal to the master image.
    A pixel is object, don't-care border, or background, never two at once;
    the constructor rejects overlapping rasters.
    """

    __slots__ = ("object_bits", "dontcare_bits")

    def __init__(self, object_bits: np.ndarray, dontcare_bits: Optional[np.ndarray] = None):
        obj = _frozen_bool_raster(object_bits)
        if dontcare_bits is None:
            dc = _frozen_bool_raster(np.zeros_like(obj))
        else:
            dc = _frozen_bool_raster(dontcare_bits)
        if obj.shape != dc.shape:
            raise ValueError(f"raster shapes differ: {obj.shape} vs {dc.shape}")
        if bool(np.any(obj & dc)):
            raise ValueError("object and don't-care rasters overlap")
        self.object_bits = obj
        self.dontcare_bits = dc

    @classmethod
    def empty(cls, width: int, height: int) -> "PixelMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.object_bits.shape[1]

    @property
    def height(self) -> int:
        return self.object_bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.object_bits.shape

    def pixel_count(self) -> int:
        return int(self.object_bits.sum())

    def with_object_bits(self, bits: np.ndarray) -> "PixelMask":
        """New mask with replaced object raster; band pixels now covered
        by an object are dropped to keep the rasters disjoint."""
        obj = np.asarray(bits, dtype=bool)
        return PixelMask(obj, self.dontcare_bits & ~obj)

    def with_dontcare_bits(self, bits: np.ndarray) -> "PixelMask":
        return PixelMask(self.object_bits, np.asarray(bits, dtype=bool) & ~self.object_bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PixelMask):
            return NotImplemented
        return (
            self.object_bits.shape == other.object_bits.shape
            and bool(np.array_equal(self.object_bits, other.object_bits))
            and bool(np.array_equal(self.dontcare_bits, other.dontcare_bits))
        )

    def __hash__(self):
        return hash((self.shape, self.object_bits.tobytes()))

    def __repr__(self):
        return (
            f"PixelMask({self.width}x{self.height}, "
            f"{self.pixel_count()} object px, {int(self.dontcare_bits.sum())} band px)"
        )


Geometry = Union[BoundingBox, Polygon, PixelMask]


@dataclass(frozen=True)
class AnnotatedObject:
    """One object in one frame: identity, classification, and geometry."""

    id: int
    tag: str
    geometry: Geometry
    status: ObjectStatus = ObjectStatus.ACTIVE
    meta: dict[str, bool] = field(default_factory=dict)

    def with_geometry(self, geometry: Geometry) -> "AnnotatedObject":
        return replace(self, geometry=geometry)

    def with_id(self, object_id: int) -> "AnnotatedObject":
        return replace(self, id=object_id)


def _sorted_objects(objects: Iterable[AnnotatedObject]) -> tuple[AnnotatedObject, ...]:
    return tuple(sorted(objects, key=lambda o: o.id))


@dataclass(frozen=True)
class FrameAnnotations:
    """All objects for one source image.

    ``shared_dontcare`` carries a don't-care band that cannot be attributed
    to a single object (a decoded multi-object ID image merges all bands).
    """

    frame_index: int
    image_file: str
    objects: tuple[AnnotatedObject, ...] = ()
    shared_dontcare: Optional[np.ndarray] = None

    def __post_init__(self):
        objs = tuple(self.objects)
        ids = [o.id for o in objs]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate object IDs in frame {self.frame_index}")
        object.__setattr__(self, "objects", objs)
        if self.shared_dontcare is not None:
            object.__setattr__(self, "shared_dontcare", _frozen_bool_raster(self.shared_dontcare))

    def get(self, object_id: int) -> Optional[AnnotatedObject]:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        return None

    def without(self, object_id: int) -> "FrameAnnotations":
        return replace(self, objects=tuple(o for o in self.objects if o.id != object_id))

    def upsert(self, obj: AnnotatedObject) -> "FrameAnnotations":
        rest = tuple(o for o in self.objects if o.id != obj.id)
        return replace(self, objects=rest + (obj,))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameAnnotations):
            return NotImplemented
        if (self.frame_index, self.image_file) != (other.frame_index, other.image_file):
            return False
        if _sorted_objects(self.objects) != _sorted_objects(other.objects):
            return False
        a, b = self.shared_dontcare, other.shared_dontcare
        a_empty = a is None or not a.any()
        b_empty = b is None or not b.any()
        if a_empty and b_empty:
            return True
        if a is None or b is None:
            return False
        return bool(np.array_equal(a, b))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class AnnotationStore:
    """Sparse per-frame annotations for one sequence.

    ``image_size`` is (width, height) of the master modality; it is known
    once any image or mask has been seen and is required by operations that
    rasterize geometry.
    """

    frame_files: tuple[str, ...]
    frames: dict[int, FrameAnnotations] = field(default_factory=dict)
    image_size: Optional[tuple[int, int]] = None

    @property
    def num_frames(self) -> int:
        return len(self.frame_files)

    def check_index(self, idx: int) -> None:
        if not 0 <= idx < self.num_frames:
            raise IndexError(f"frame index {idx} not in [0, {self.num_frames})")

    def frame(self, idx: int) -> FrameAnnotations:
        self.check_index(idx)
        got = self.frames.get(idx)
        if got is not None:
            return got
        return FrameAnnotations(idx, self.frame_files[idx])

    def objects_at(self, idx: int) -> tuple[AnnotatedObject, ...]:
        return self.frame(idx).objects

    def with_frame(self, fa: FrameAnnotations) -> "AnnotationStore":
        self.check_index(fa.frame_index)
        frames = dict(self.frames)
        if fa.objects or (fa.shared_dontcare is not None and fa.shared_dontcare.any()):
            frames[fa.frame_index] = fa
        else:
            frames.pop(fa.frame_index, None)
        return replace(self, frames=frames)

    def with_image_size(self, size: tuple[int, int]) -> "AnnotationStore":
        return replace(self, image_size=size)

    def all_ids(self) -> set[int]:
        return {o.id for fa in self.frames.values() for o in fa.objects}

    def all_tags(self) -> set[str]:
        return {o.tag for fa in self.frames.values() for o in fa.objects}

    def nonempty_frames(self) -> list[FrameAnnotations]:
        return [self.frames[i] for i in sorted(self.frames)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnnotationStore):
            return NotImplemented
        if self.frame_files != other.frame_files:
            return False
        mine = {i: f for i, f in self.frames.items() if f.objects or _has_band(f)}
        theirs = {i: f for i, f in other.frames.items() if f.objects or _has_band(f)}
        return mine == theirs

    __hash__ = None  # type: ignore[assignment]


def _has_band(fa: FrameAnnotations) -> bool:
    return fa.shared_dontcare is not None and bool(fa.shared_dontcare.any())


@dataclass(frozen=True)
class Modality:
    directory: str
    pattern: str = "*.png"


@dataclass(frozen=True)
class Modalities:
    rgb: Modality
    thermal: Optional[Modality] = None


@dataclass(frozen=True)
class Project:
    """An annotation sequence plus its configuration."""

    root_dir: Path
    frame_files: tuple[str, ...]
    geometry_kind: GeometryKind
    meta_schema: tuple[str, ...] = ()
    suggested_tags: tuple[str, ...] = ()
    limit_tags: bool = False
    modalities: Modalities = Modalities(Modality("."))
    dontcare_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "root_dir", Path(self.root_dir))
        object.__setattr__(self, "frame_files", tuple(self.frame_files))
        object.__setattr__(self, "meta_schema", tuple(self.meta_schema))
        object.__setattr__(self, "suggested_tags", tuple(self.suggested_tags))
        if self.dontcare_mask is not None:
            object.__setattr__(self, "dontcare_mask", _frozen_bool_raster(self.dontcare_mask))


def pixel_id_legal(object_id: int) -> bool:
    return PIXEL_ID_MIN <= object_id <= PIXEL_ID_MAX and object_id != DONTCARE_VALUE


def validate_object(
    obj: AnnotatedObject,
    project: Project,
    image_size: Optional[tuple[int, int]] = None,
) -> list[str]:
    """Check one object against the project's rules.

    Returns a list of human-readable violations; an empty list means the
    object is valid under the project settings. Violations are data,
    not failures: nothing raises here.
    """
    violations: list[str] = []

    if obj.id < 0:
        violations.append(f"id: {obj.id} is negative")
    elif project.geometry_kind is GeometryKind.PIXEL:
        if obj.id == DONTCARE_VALUE:
            violations.append(f"id: {DONTCARE_VALUE} is the reserved don't-care ID")
        elif obj.id in RESERVED_INTERNAL_IDS:
            violations.append(f"id: IDs 0-10 are reserved for internal use (got {obj.id})")
        elif obj.id > PIXEL_ID_MAX:
            violations.append(f"id: {obj.id} exceeds the 8-bit mask range [11, 255]")

    if not obj.tag:
        violations.append("tag: must be non-empty")
    elif project.limit_tags and obj.tag not in project.suggested_tags:
        violations.append(f"tag: {obj.tag!r} not in the suggested-tag list")

    schema = set(project.meta_schema)
    keys = set(obj.meta)
    for missing in sorted(schema - keys):
        violations.append(f"meta: missing flag {missing!r}")
    for extra in sorted(keys - schema):
        violations.append(f"meta: unknown flag {extra!r}")

    violations.extend(_validate_geometry(obj.geometry, project, image_size))
    return violations


def _validate_geometry(
    geometry: Geometry, project: Project, image_size: Optional[tuple[int, int]]
) -> list[str]:
    out: list[str] = []
    if isinstance(geometry, BoundingBox):
        if project.geometry_kind is not GeometryKind.BOX:
            out.append("geometry: box geometry in a pixel project")
        if image_size is not None and not geometry.intersects_image(*image_size):
            out.append("geometry: box does not intersect the image")
    elif isinstance(geometry, (Polygon, PixelMask)):
        if project.geometry_kind is not GeometryKind.PIXEL:
            out.append("geometry: pixel geometry in a box project")
        if isinstance(geometry, PixelMask) and image_size is not None:
            if (geometry.width, geometry.height) != tuple(image_size):
                out.append(
                    f"geometry: mask size {geometry.width}x{geometry.height} "
                    f"differs from image {image_size[0]}x{image_size[1]}"
                )
    else:
        out.append(f"geometry: unsupported type {type(geometry).__name__}")
    return out


def next_free_id(project: Project, all_frames: Iterable[FrameAnnotations]) -> int:
    """Smallest ID legal for the project's geometry kind and unused by any track."""
    used = {o.id for fa in all_frames for o in fa.objects}
    if project.geometry_kind is GeometryKind.BOX:
        candidate = 0
        while candidate in used:
            candidate += 1
        return candidate
    for candidate in LEGAL_PIXEL_IDS:
        if candidate not in used:
            return candidate
    raise IdSpaceExhausted(
        f"all {len(LEGAL_PIXEL_IDS)} legal pixel-project IDs are in use"
    )
