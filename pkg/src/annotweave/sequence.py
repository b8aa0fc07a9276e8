"""Temporal editing over frame annotations.

Retain copies work into adjacent frames, interpolation fills box tracks
between keyframes, and the delete/merge operations sweep from a frame to
the end of the sequence. Every operation returns a new store; reports for
the destructive ones are produced before mutation so callers can prompt
the user first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .errors import MissingKeyframe, NotBoxGeometry, SameId
from .masks.ops import mask_to_bbox, rasterize_polygon
from .model import (
    AnnotatedObject,
    AnnotationStore,
    BoundingBox,
    ObjectStatus,
    PixelMask,
    Polygon,
)

HISTORY_RADIUS = 5


def retain(store: AnnotationStore, from_idx: int, to_idx: int) -> AnnotationStore:
    """Copy the source frame's Active objects into an adjacent frame.

    Objects whose status is LAST_FRAME_REACHED are skipped, and objects
    already present at the target (same ID) are left untouched.
    """
    store.check_index(from_idx)
    store.check_index(to_idx)
    if abs(from_idx - to_idx) != 1:
        raise ValueError(f"retain targets an adjacent frame, got {from_idx}->{to_idx}")
    target = store.frame(to_idx)
    present = {o.id for o in target.objects}
    copied = tuple(
        obj
        for obj in store.objects_at(from_idx)
        if obj.status is ObjectStatus.ACTIVE and obj.id not in present
    )
    if not copied:
        return store
    return store.with_frame(replace(target, objects=target.objects + copied))


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def interpolate(
    store: AnnotationStore, object_id: int, start_idx: int, end_idx: int
) -> AnnotationStore:
    """Fill the frames between two box keyframes with a linear blend.

    Corner coordinates interpolate with t = (n - start) / (end - start)
    and round half-up; tag, meta, and status copy from the start keyframe.
    Existing intermediate annotations of the same ID are overwritten.
    """
    store.check_index(start_idx)
    store.check_index(end_idx)
    if end_idx - start_idx < 2:
        raise ValueError(f"need at least one intermediate frame, got {start_idx}..{end_idx}")
    first = store.frame(start_idx).get(object_id)
    last = store.frame(end_idx).get(object_id)
    if first is None or last is None:
        raise MissingKeyframe(
            f"ID {object_id} is not annotated at both frames {start_idx} and {end_idx}"
        )
    if not isinstance(first.geometry, BoundingBox) or not isinstance(last.geometry, BoundingBox):
        raise NotBoxGeometry("interpolation works on bounding boxes only")

    a, b = first.geometry, last.geometry
    span = end_idx - start_idx
    out = store
    for n in range(start_idx + 1, end_idx):
        t = (n - start_idx) / span
        box = BoundingBox(
            _round_half_up(a.ul_x + t * (b.ul_x - a.ul_x)),
            _round_half_up(a.ul_y + t * (b.ul_y - a.ul_y)),
            _round_half_up(a.lr_x + t * (b.lr_x - a.lr_x)),
            _round_half_up(a.lr_y + t * (b.lr_y - a.lr_y)),
        )
        frame = out.frame(n).upsert(
            AnnotatedObject(
                id=object_id,
                tag=first.tag,
                geometry=box,
                status=first.status,
                meta=dict(first.meta),
            )
        )
        out = out.with_frame(frame)
    return out


def delete_forward(
    store: AnnotationStore, ids: Iterable[int], from_idx: int
) -> tuple[AnnotationStore, list[tuple[int, int]]]:
    """Remove the given IDs in every frame >= from_idx.

    Returns the new store plus the (frame, id) pairs that were removed;
    the report is complete even if empty, so UIs can show the severity
    of the action before committing it.
    """
    store.check_index(from_idx)
    targets = set(ids)
    report: list[tuple[int, int]] = []
    out = store
    for idx in range(from_idx, store.num_frames):
        frame = out.frame(idx)
        hit = sorted(o.id for o in frame.objects if o.id in targets)
        if not hit:
            continue
        report.extend((idx, object_id) for object_id in hit)
        for object_id in hit:
            frame = frame.without(object_id)
        out = out.with_frame(frame)
    return out, report


@dataclass(frozen=True)
class MergeChange:
    frame_index: int
    action: str  # "relabeled" or "merged"


def merge_forward(
    store: AnnotationStore, keep_id: int, absorb_id: int, from_idx: int
) -> tuple[AnnotationStore, list[MergeChange]]:
    """Fold absorb_id into keep_id in every frame >= from_idx.

    Frames holding only absorb_id re-label it; frames holding both merge
    the geometries (boxes by union hull, masks by bitwise OR) under
    keep_id's properties, and absorb_id disappears either way.
    """
    if keep_id == absorb_id:
        raise SameId(f"cannot merge ID {keep_id} with itself")
    store.check_index(from_idx)
    out = store
    changes: list[MergeChange] = []
    for idx in range(from_idx, store.num_frames):
        frame = out.frame(idx)
        absorbed = frame.get(absorb_id)
        if absorbed is None:
            continue
        kept = frame.get(keep_id)
        frame = frame.without(absorb_id)
        if kept is None:
            frame = frame.upsert(absorbed.with_id(keep_id))
            changes.append(MergeChange(idx, "relabeled"))
        else:
            merged = merge_geometries(kept.geometry, absorbed.geometry, out.image_size)
            frame = frame.upsert(kept.with_geometry(merged))
            changes.append(MergeChange(idx, "merged"))
        out = out.with_frame(frame)
    return out, changes


def merge_geometries(keep, absorb, image_size: Optional[tuple[int, int]]):
    """Union of two geometries: box hull, mask OR, or rasterized polygon OR."""
    if isinstance(keep, BoundingBox) and isinstance(absorb, BoundingBox):
        return keep.union(absorb)
    if isinstance(keep, (PixelMask, Polygon)) and isinstance(absorb, (PixelMask, Polygon)):
        size = image_size
        for geom in (keep, absorb):
            if isinstance(geom, PixelMask):
                size = (geom.width, geom.height)
                break
        if size is None:
            raise ValueError("merging two polygons needs a known image size")
        a = _as_mask(keep, size)
        b = _as_mask(absorb, size)
        obj = a.object_bits | b.object_bits
        band = (a.dontcare_bits | b.dontcare_bits) & ~obj
        return PixelMask(obj, band)
    raise ValueError(
        f"cannot merge {type(keep).__name__} with {type(absorb).__name__}"
    )


def _as_mask(geom, size: tuple[int, int]) -> PixelMask:
    if isinstance(geom, PixelMask):
        return geom
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # degenerate polygons just merge as empty
        return PixelMask(rasterize_polygon(geom, size[0], size[1]))


def history_window(
    store: AnnotationStore, object_id: int, center_idx: int, radius: int = HISTORY_RADIUS
) -> list[Optional[tuple[int, BoundingBox]]]:
    """Crop rectangles for one ID around a center frame.

    Gives 2*radius + 1 slots ordered oldest first; a slot is None when
    the frame falls outside the sequence or the ID is absent there.
    Mask and polygon geometries report their tight bounding box.
    """
    store.check_index(center_idx)
    slots: list[Optional[tuple[int, BoundingBox]]] = []
    for idx in range(center_idx - radius, center_idx + radius + 1):
        if not 0 <= idx < store.num_frames:
            slots.append(None)
            continue
        obj = store.frame(idx).get(object_id)
        if obj is None:
            slots.append(None)
            continue
        box = _crop_box(obj.geometry)
        slots.append((idx, box) if box is not None else None)
    return slots


def _crop_box(geom) -> Optional[BoundingBox]:
    if isinstance(geom, BoundingBox):
        return geom
    if isinstance(geom, Polygon):
        return geom.bounds()
    if isinstance(geom, PixelMask):
        if not geom.object_bits.any():
            return None
        return mask_to_bbox(geom)
    return None
