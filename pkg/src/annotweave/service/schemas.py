"""Request bodies and JSON codecs for the HTTP API.

Geometry travels as JSON: boxes and polygons as coordinates, masks as
column-major counts RLE. The server never rasterizes overlays; the UI
composites locally.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..exporters.coco import rle_decode, rle_encode
from ..masks.ops import Brush, BrushKind
from ..model import AnnotatedObject, BoundingBox, FrameAnnotations, ObjectStatus, PixelMask, Polygon

_BRUSH_KINDS = {
    "true_positive": BrushKind.TRUE_POSITIVE,
    "true_negative": BrushKind.TRUE_NEGATIVE,
    "add": BrushKind.ADD_TO_MASK,
    "remove": BrushKind.REMOVE_FROM_MASK,
}


def rle_json(bits: np.ndarray) -> dict:
    return {"size": [int(bits.shape[0]), int(bits.shape[1])], "counts": rle_encode(bits)}


def bits_from_rle(doc: dict) -> np.ndarray:
    height, width = (int(v) for v in doc["size"])
    return rle_decode(doc["counts"], height, width)


def geometry_json(geometry) -> dict:
    if isinstance(geometry, BoundingBox):
        return {"type": "box", "ul_x": geometry.ul_x, "ul_y": geometry.ul_y,
                "lr_x": geometry.lr_x, "lr_y": geometry.lr_y}
    if isinstance(geometry, Polygon):
        return {"type": "polygon", "points": [[x, y] for x, y in geometry.points]}
    if isinstance(geometry, PixelMask):
        doc = {"type": "mask", "rle": rle_json(geometry.object_bits)}
        if geometry.dontcare_bits.any():
            doc["dontcare_rle"] = rle_json(geometry.dontcare_bits)
        return doc
    raise ValueError(f"unsupported geometry {type(geometry).__name__}")


def geometry_from_json(doc: dict):
    kind = doc.get("type")
    if kind == "box":
        return BoundingBox(int(doc["ul_x"]), int(doc["ul_y"]), int(doc["lr_x"]), int(doc["lr_y"]))
    if kind == "polygon":
        return Polygon(tuple((float(x), float(y)) for x, y in doc["points"]))
    if kind == "mask":
        bits = bits_from_rle(doc["rle"])
        band = bits_from_rle(doc["dontcare_rle"]) if doc.get("dontcare_rle") else None
        return PixelMask(bits, band)
    raise ValueError(f"unknown geometry type {kind!r}")


def object_json(obj: AnnotatedObject) -> dict:
    return {
        "id": obj.id,
        "tag": obj.tag,
        "status": obj.status.value,
        "meta": dict(obj.meta),
        "geometry": geometry_json(obj.geometry),
    }


def frame_json(frame: FrameAnnotations) -> dict:
    doc = {
        "frame_index": frame.frame_index,
        "image_file": frame.image_file,
        "objects": [object_json(o) for o in sorted(frame.objects, key=lambda o: o.id)],
    }
    if frame.shared_dontcare is not None and frame.shared_dontcare.any():
        doc["shared_dontcare_rle"] = rle_json(frame.shared_dontcare)
    return doc


def brush_from_json(doc: dict) -> Brush:
    kind = _BRUSH_KINDS.get(doc.get("kind", ""))
    if kind is None:
        raise ValueError(f"unknown brush kind {doc.get('kind')!r}")
    return Brush(kind, int(doc.get("radius", 1)), tuple((int(x), int(y)) for x, y in doc["stroke"]))


def status_from_text(text: str) -> ObjectStatus:
    return ObjectStatus(text)


# --- request bodies ----------------------------------------------------------


class OpenProject(BaseModel):
    root: str
    settings: Optional[dict] = None


class CloseProject(BaseModel):
    save: bool = True


class CreateAnnotation(BaseModel):
    tag: str
    geometry: dict
    meta: dict[str, bool] = Field(default_factory=dict)
    status: Literal["active", "lastframe"] = "active"
    id: Optional[int] = None  # omitted: server assigns via next_free_id


class UpdateAnnotation(BaseModel):
    tag: Optional[str] = None
    geometry: Optional[dict] = None
    meta: Optional[dict[str, bool]] = None
    status: Optional[Literal["active", "lastframe"]] = None


class GrabCutInit(BaseModel):
    frame_index: int
    rect: list[int]
    iterations: int = 5


class GrabCutRefine(BaseModel):
    brushes: list[dict] = Field(default_factory=list)
    iterations: int = 5


class GrabCutCommit(BaseModel):
    tag: str = "object"
    object_id: Optional[int] = None
    dontcare_width: int = 0
    meta: dict[str, bool] = Field(default_factory=dict)


class MaskOp(BaseModel):
    op: Literal["apply_brush", "remove_noise", "fill_holes", "dontcare_border"]
    brush: Optional[dict] = None
    min_area: int = 16
    width: float = 0


class RetainRequest(BaseModel):
    from_index: int
    to_index: int


class InterpolateRequest(BaseModel):
    object_id: int
    start_index: int
    end_index: int


class DeleteForwardRequest(BaseModel):
    ids: list[int]
    from_index: int
    confirm: bool = False


class MergeForwardRequest(BaseModel):
    keep_id: int
    absorb_id: int
    from_index: int
    confirm: bool = False


class ExportYoloRequest(BaseModel):
    categories: str
    out_dir: str


class ExportCocoRequest(BaseModel):
    mode: Literal["polygon", "rle"] = "rle"
    out_path: str
    categories: Optional[str] = None


class SettingsUpdate(BaseModel):
    suggested_tags: Optional[list[str]] = None
    meta_schema: Optional[list[str]] = None
    confirm_meta_removals: bool = False
    limit_tags: Optional[bool] = None
    dontcare_border_width: Optional[int] = None
    file_pattern: Optional[str] = None


class SaveRequest(BaseModel):
    pass
