"""Pixel-level geometry: GrabCut, brushes, polygon fill, filters, ID codec."""

from .grabcut import (
    DEFAULT_ITERATIONS,
    GrabCutResult,
    GrabCutState,
    grabcut_init,
    grabcut_refine,
)
from .idcodec import DecodedIdImage, decode_id_image, encode_id_image
from .ops import (
    DEFAULT_MIN_NOISE_AREA,
    Brush,
    BrushKind,
    add_dontcare_border,
    apply_brush,
    fill_holes,
    mask_to_bbox,
    rasterize_polygon,
    remove_noise,
)

__all__ = [
    "DEFAULT_ITERATIONS",
    "DEFAULT_MIN_NOISE_AREA",
    "Brush",
    "BrushKind",
    "DecodedIdImage",
    "GrabCutResult",
    "GrabCutState",
    "add_dontcare_border",
    "apply_brush",
    "decode_id_image",
    "encode_id_image",
    "fill_holes",
    "grabcut_init",
    "grabcut_refine",
    "mask_to_bbox",
    "rasterize_polygon",
    "remove_noise",
]
