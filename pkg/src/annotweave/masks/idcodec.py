"""Grayscale ID-image codec.

Pixel masks are persisted as 8-bit single-channel images: the pixel value
is the owning object's ID, 170 marks don't-care borders, 0 is background,
and 1..10 stay reserved for internal use.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import OverlappingObjects, ReservedId, UnknownId
from ..errors import ReservedValueWarning
from ..model import DONTCARE_VALUE, PixelMask, RESERVED_INTERNAL_IDS, pixel_id_legal


def encode_id_image(
    objects: Sequence[tuple[int, PixelMask]],
    width: int,
    height: int,
    shared_dontcare: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Render disjoint object masks into one uint8 raster.

    Object pixels take precedence over any don't-care band (their own,
    other objects', or the shared frame band).
    """
    for object_id, _ in objects:
        if not pixel_id_legal(object_id):
            raise ReservedId(f"ID {object_id} is not a legal pixel-project ID")
    raster = np.zeros((height, width), dtype=np.uint8)
    coverage = np.zeros((height, width), dtype=np.uint16)
    band = np.zeros((height, width), dtype=bool)
    if shared_dontcare is not None:
        band |= np.asarray(shared_dontcare, dtype=bool)
    for object_id, mask in objects:
        if mask.shape != (height, width):
            raise ValueError(
                f"mask for ID {object_id} has shape {mask.shape}, expected {(height, width)}"
            )
        coverage += mask.object_bits
        band |= mask.dontcare_bits
    overlap = int((coverage > 1).sum())
    if overlap:
        raise OverlappingObjects(overlap)
    raster[band] = DONTCARE_VALUE
    for object_id, mask in objects:
        raster[mask.object_bits] = object_id
    return raster


@dataclass
class DecodedIdImage:
    """Result of decoding one ID raster.

    When the raster holds exactly one object, the 170 band is attributed
    to it; with several objects the band cannot be split and lands in
    ``shared_dontcare`` instead.
    """

    objects: list[tuple[int, PixelMask]] = field(default_factory=list)
    shared_dontcare: Optional[np.ndarray] = None


def decode_id_image(
    raster: np.ndarray, expected_ids: Optional[Sequence[int]] = None
) -> DecodedIdImage:
    """Split an ID raster back into per-object masks.

    Values from the internal-reserved range 1..10 are ignored with a
    warning. With ``expected_ids`` given, any other foreign ID raises.
    """
    arr = np.asarray(raster)
    if arr.ndim != 2:
        raise ValueError(f"ID image must be 2-D, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError("ID image values must fit in uint8")
    values = [int(v) for v in np.unique(arr)]

    reserved = [v for v in values if v in RESERVED_INTERNAL_IDS and v != 0]
    if reserved:
        warnings.warn(
            f"ignoring internally reserved ID values {reserved}",
            ReservedValueWarning,
            stacklevel=2,
        )

    object_values = [v for v in values if pixel_id_legal(v)]
    if expected_ids is not None:
        foreign = sorted(set(object_values) - set(int(i) for i in expected_ids))
        if foreign:
            raise UnknownId(f"ID image contains unexpected IDs {foreign}")

    band = arr == DONTCARE_VALUE
    result = DecodedIdImage()
    if len(object_values) == 1 and band.any():
        v = object_values[0]
        result.objects.append((v, PixelMask(arr == v, band)))
        return result
    for v in object_values:
        result.objects.append((v, PixelMask(arr == v)))
    if band.any():
        result.shared_dontcare = band
    return result
