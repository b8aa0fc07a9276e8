"""One-way exports: YOLO/Darknet labels, COCO JSON, box conversion."""

from .categories import CategoryList, builtin_category_list, load_category_lists
from .coco import (
    CocoExport,
    MaskMode,
    export_coco,
    polygon_area,
    rle_decode,
    rle_encode,
    trace_boundaries,
)
from .convert import ConversionResult, convert_pixel_to_box
from .yolo import SkippedObject, YoloExport, export_yolo

__all__ = [
    "CategoryList",
    "CocoExport",
    "ConversionResult",
    "MaskMode",
    "SkippedObject",
    "YoloExport",
    "builtin_category_list",
    "convert_pixel_to_box",
    "export_coco",
    "export_yolo",
    "load_category_lists",
    "polygon_area",
    "rle_decode",
    "rle_encode",
    "trace_boundaries",
]
