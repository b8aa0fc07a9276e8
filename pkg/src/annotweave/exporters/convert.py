"""Pixel project to box project conversion."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..masks.ops import mask_to_bbox
from ..model import (
    AnnotationStore,
    BoundingBox,
    FrameAnnotations,
    GeometryKind,
    PixelMask,
    Polygon,
    Project,
)


@dataclass
class ConversionResult:
    project: Project
    store: AnnotationStore
    dropped: list[tuple[int, int]] = field(default_factory=list)  # (frame, id)


def convert_pixel_to_box(store: AnnotationStore, project: Project) -> ConversionResult:
    """Replace every mask/polygon with its tight bounding box.

    IDs, tags, meta flags, and status survive; objects with an empty mask
    in some frame are dropped from that frame only and reported.
    """
    dropped: list[tuple[int, int]] = []
    frames = {}
    for idx, fa in store.frames.items():
        objects = []
        for obj in fa.objects:
            box = _tight_box(obj.geometry)
            if box is None:
                dropped.append((idx, obj.id))
                continue
            objects.append(obj.with_geometry(box))
        if objects:
            frames[idx] = FrameAnnotations(idx, fa.image_file, tuple(objects))
    new_store = AnnotationStore(store.frame_files, frames, store.image_size)
    new_project = replace(project, geometry_kind=GeometryKind.BOX, dontcare_mask=project.dontcare_mask)
    return ConversionResult(new_project, new_store, sorted(dropped))


def _tight_box(geometry):
    if isinstance(geometry, BoundingBox):
        return geometry
    if isinstance(geometry, Polygon):
        return geometry.bounds()
    if isinstance(geometry, PixelMask):
        if not geometry.object_bits.any():
            return None
        return mask_to_bbox(geometry)
    return None
