"""COCO JSON export.

One document lists every frame under `images`, the tag universe under
`categories` (1-based IDs), and one entry per object per frame under
`annotations`. Pixel masks serialize either as traced boundary polygons
or as column-major counts-based RLE starting with the zero run; the
don't-care band never reaches the export. Mask area is the exact pixel
count; polygon-geometry area comes from the shoelace formula.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import IoFailure
from ..masks.ops import mask_to_bbox
from ..model import AnnotationStore, BoundingBox, PixelMask, Polygon, Project
from .categories import CategoryList
from .yolo import SkippedObject


class MaskMode(Enum):
    POLYGON = "polygon"
    RLE = "rle"


@dataclass
class CocoExport:
    path: Optional[Path]
    document: dict
    skipped: list[SkippedObject] = field(default_factory=list)


def rle_encode(bits: np.ndarray) -> list[int]:
    """Counts-based RLE in column-major order, first run counting zeros.

    An all-zero h*w mask encodes as [h*w]; a mask whose first column-major
    pixel is set gets a leading zero-length run.
    """
    flat = np.asarray(bits, dtype=bool).ravel(order="F")
    if flat.size == 0:
        return [0]
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(counts, height: int, width: int) -> np.ndarray:
    """Inverse of rle_encode; rejects counts that do not sum to h*w."""
    flat = np.zeros(height * width, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        run = int(run)
        if run < 0 or pos + run > flat.size:
            raise ValueError("RLE counts exceed the raster size")
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    if pos != flat.size:
        raise ValueError(f"RLE counts sum to {pos}, expected {flat.size}")
    return flat.reshape((height, width), order="F")


def trace_boundaries(bits: np.ndarray) -> list[list[tuple[int, int]]]:
    """Closed vertex loops along pixel edges enclosing the set pixels.

    Rasterizing the loops back with the even-odd center rule reproduces
    the mask exactly; holes come out as separate loops. At corners where
    two diagonal pixels touch, the walk turns clockwise, keeping each
    loop simple. Collinear runs are merged.
    """
    bits = np.asarray(bits, dtype=bool)
    h, w = bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    ys, xs = np.nonzero(bits)
    for py, px in zip(ys.tolist(), xs.tolist()):
        if not padded[py, px + 1]:  # nothing above: top edge, left to right
            edges.setdefault((px, py), []).append((px + 1, py))
        if not padded[py + 1, px + 2]:  # right edge, downwards
            edges.setdefault((px + 1, py), []).append((px + 1, py + 1))
        if not padded[py + 2, px + 1]:  # bottom edge, right to left
            edges.setdefault((px + 1, py + 1), []).append((px, py + 1))
        if not padded[py + 1, px]:  # left edge, upwards
            edges.setdefault((px, py + 1), []).append((px, py))

    loops = []
    for start in sorted(edges):
        while edges.get(start):
            loop = [start]
            prev_dir = None
            point = start
            while True:
                candidates = edges[point]
                end = _pick_turn(point, prev_dir, candidates)
                candidates.remove(end)
                if not candidates:
                    del edges[point]
                prev_dir = (end[0] - point[0], end[1] - point[1])
                if end == start:
                    break
                loop.append(end)
                point = end
            loops.append(_merge_collinear(loop))
    return loops


def _pick_turn(point, prev_dir, candidates):
    if len(candidates) == 1 or prev_dir is None:
        return candidates[0]
    # clockwise turn first (y grows downward), then straight
    ranked = sorted(
        candidates,
        key=lambda end: _turn_rank(prev_dir, (end[0] - point[0], end[1] - point[1])),
    )
    return ranked[0]


def _turn_rank(d_in, d_out):
    cross = d_in[0] * d_out[1] - d_in[1] * d_out[0]
    if cross > 0:
        return 0  # clockwise
    if cross == 0:
        return 1
    return 2


def _merge_collinear(loop: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    n = len(loop)
    for i, point in enumerate(loop):
        before = loop[i - 1]
        after = loop[(i + 1) % n]
        d1 = (point[0] - before[0], point[1] - before[1])
        d2 = (after[0] - point[0], after[1] - point[1])
        if d1[0] * d2[1] - d1[1] * d2[0] != 0:
            out.append(point)
    return out


def polygon_area(points) -> float:
    total = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def export_coco(
    store: AnnotationStore,
    project: Project,
    out_path=None,
    mask_mode: MaskMode = MaskMode.RLE,
    categories: Optional[CategoryList] = None,
) -> CocoExport:
    """Build (and optionally write) the COCO document.

    Category IDs follow the supplied list (list position + 1); without a
    list they are assigned 1-based by first appearance. Tags missing from
    a supplied list are skipped and reported.
    """
    size = store.image_size
    if size is None:
        raise IoFailure("image size unknown; COCO export needs image dimensions")
    width, height = size

    images = [
        {"id": idx + 1, "file_name": name, "width": width, "height": height}
        for idx, name in enumerate(project.frame_files)
    ]

    category_ids: dict[str, int] = {}
    if categories is not None:
        category_ids = {tag: i + 1 for i, tag in enumerate(categories.entries)}

    annotations = []
    skipped: list[SkippedObject] = []
    next_annotation = 1
    for idx in range(store.num_frames):
        for obj in sorted(store.objects_at(idx), key=lambda o: o.id):
            if obj.tag not in category_ids:
                if categories is not None:
                    skipped.append(
                        SkippedObject(idx, obj.id, f"tag {obj.tag!r} not in category list")
                    )
                    continue
                category_ids[obj.tag] = len(category_ids) + 1
            entry = _annotation_entry(obj, mask_mode, width, height)
            if entry is None:
                skipped.append(SkippedObject(idx, obj.id, "empty geometry"))
                continue
            entry.update(
                id=next_annotation,
                image_id=idx + 1,
                category_id=category_ids[obj.tag],
            )
            annotations.append(entry)
            next_annotation += 1

    document = {
        "images": images,
        "categories": [
            {"id": cid, "name": tag} for tag, cid in sorted(category_ids.items(), key=lambda kv: kv[1])
        ],
        "annotations": annotations,
    }
    path = None
    if out_path is not None:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    return CocoExport(path, document, skipped)


def _annotation_entry(obj, mask_mode: MaskMode, width: int, height: int) -> Optional[dict]:
    geometry = obj.geometry
    if isinstance(geometry, BoundingBox):
        x1, y1, x2, y2 = geometry.as_tuple()
        return {
            "bbox": [x1, y1, x2 - x1, y2 - y1],
            "area": geometry.area,
            "iscrowd": 0,
            "segmentation": [[x1, y1, x2, y1, x2, y2, x1, y2]],
        }
    if isinstance(geometry, Polygon):
        xs = [p[0] for p in geometry.points]
        ys = [p[1] for p in geometry.points]
        flat = [coord for point in geometry.points for coord in point]
        return {
            "bbox": [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)],
            "area": polygon_area(geometry.points),
            "iscrowd": 0,
            "segmentation": [flat],
        }
    if isinstance(geometry, PixelMask):
        if not geometry.object_bits.any():
            return None
        box = mask_to_bbox(geometry)
        bbox = [box.ul_x, box.ul_y, box.width, box.height]
        area = geometry.pixel_count()
        if mask_mode is MaskMode.RLE:
            segmentation = {
                "size": [height, width],
                "counts": rle_encode(geometry.object_bits),
            }
            iscrowd = 1
        else:
            loops = trace_boundaries(geometry.object_bits)
            segmentation = [
                [float(coord) for point in loop for coord in point] for loop in loops
            ]
            iscrowd = 0
        return {"bbox": bbox, "area": area, "iscrowd": iscrowd, "segmentation": segmentation}
    return None
