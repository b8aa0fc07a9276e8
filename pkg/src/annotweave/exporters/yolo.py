"""Darknet/YOLO training label export.

One text file per frame, named after the image stem. Every line is
`<category_id> <cx> <cy> <w> <h>` with center and size normalized by the
image dimensions, six decimal places, space separated. Boxes are clipped
to the image first so all values stay inside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import EmptyCategoryList, IoFailure
from ..masks.ops import mask_to_bbox
from ..model import AnnotationStore, BoundingBox, PixelMask, Polygon, Project
from .categories import CategoryList


@dataclass(frozen=True)
class SkippedObject:
    frame_index: int
    object_id: int
    reason: str


@dataclass
class YoloExport:
    files: list[Path] = field(default_factory=list)
    skipped: list[SkippedObject] = field(default_factory=list)


def export_yolo(
    store: AnnotationStore,
    project: Project,
    categories: CategoryList,
    out_dir,
) -> YoloExport:
    """Write one label file per frame; objects whose tag has no category
    are skipped and reported, never silently dropped."""
    if not categories.entries:
        raise EmptyCategoryList(f"category list {categories.name!r} has no entries")
    size = store.image_size
    if size is None:
        raise IoFailure("image size unknown; cannot normalize YOLO coordinates")
    width, height = size

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = YoloExport()
    for idx, image_file in enumerate(project.frame_files):
        lines = []
        for obj in sorted(store.objects_at(idx), key=lambda o: o.id):
            category = categories.id_of(obj.tag)
            if category is None:
                result.skipped.append(
                    SkippedObject(idx, obj.id, f"tag {obj.tag!r} not in category list")
                )
                continue
            box = _to_box(obj.geometry)
            if box is None:
                result.skipped.append(SkippedObject(idx, obj.id, "empty geometry"))
                continue
            clipped = box.clip(width, height)
            if clipped is None:
                result.skipped.append(SkippedObject(idx, obj.id, "outside the image"))
                continue
            lines.append(_format_line(category, clipped, width, height))
        path = out_dir / f"{Path(image_file).stem}.txt"
        path.write_text("".join(lines), encoding="utf-8")
        result.files.append(path)
    return result


def _to_box(geometry):
    if isinstance(geometry, BoundingBox):
        return geometry
    if isinstance(geometry, Polygon):
        return geometry.bounds()
    if isinstance(geometry, PixelMask):
        if not geometry.object_bits.any():
            return None
        return mask_to_bbox(geometry)
    return None


def _format_line(category: int, box: BoundingBox, width: int, height: int) -> str:
    cx = (box.ul_x + box.lr_x) / 2.0 / width
    cy = (box.ul_y + box.lr_y) / 2.0 / height
    w = box.width / width
    h = box.height / height
    return f"{category} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}\n"
