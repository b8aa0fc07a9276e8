"""Pixel-level geometry work: brushes, polygon fill, mask filters, borders.

All operations are pure: they take and return immutable PixelMask values.
Object pixels are 8-connected, enclosed background (holes) 4-connected;
the duality avoids paradoxical adjacency at diagonal contacts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from ..errors import DegeneratePolygonWarning, EmptyMask
from ..model import BoundingBox, PixelMask, Polygon

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

# The noise filter threshold is configurable in the UI; this is the default.
DEFAULT_MIN_NOISE_AREA = 16


class BrushKind(Enum):
    TRUE_POSITIVE = "true_positive"
    TRUE_NEGATIVE = "true_negative"
    ADD_TO_MASK = "add"
    REMOVE_FROM_MASK = "remove"


@dataclass(frozen=True)
class Brush:
    """A stroke of disc stamps: kind, radius in pixels, ordered centers."""

    kind: BrushKind
    radius: int
    stroke: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError(f"brush radius must be >= 1, got {self.radius}")
        object.__setattr__(
            self, "stroke", tuple((int(x), int(y)) for x, y in self.stroke)
        )

    def footprint(self, width: int, height: int) -> np.ndarray:
        """Union of discs of `radius` around the stroke centers, clipped
        to the image. A pixel belongs to a disc when its center lies
        within Euclidean distance `radius` of the stamp center."""
        out = np.zeros((height, width), dtype=bool)
        r = int(self.radius)
        span = np.arange(-r, r + 1)
        dy, dx = np.meshgrid(span, span, indexing="ij")
        inside = dy * dy + dx * dx <= self.radius * self.radius
        offs_y, offs_x = dy[inside], dx[inside]
        for cx, cy in self.stroke:
            ys = offs_y + cy
            xs = offs_x + cx
            keep = (ys >= 0) & (ys < height) & (xs >= 0) & (xs < width)
            out[ys[keep], xs[keep]] = True
        return out


def apply_brush(mask: PixelMask, brush: Brush) -> PixelMask:
    """Manually add to or remove from the object raster.

    Adding clears the don't-care band where it would overlap the new
    object pixels. Stroke points outside the image are clipped away.
    """
    if brush.kind not in (BrushKind.ADD_TO_MASK, BrushKind.REMOVE_FROM_MASK):
        raise ValueError(f"apply_brush expects a manual brush, got {brush.kind}")
    if not brush.stroke:
        raise ValueError("brush stroke is empty")
    fp = brush.footprint(mask.width, mask.height)
    if brush.kind is BrushKind.ADD_TO_MASK:
        return mask.with_object_bits(mask.object_bits | fp)
    return mask.with_object_bits(mask.object_bits & ~fp)


def rasterize_polygon(poly: Polygon, width: int, height: int) -> np.ndarray:
    """Even-odd scanline fill; a pixel is set when its center (x+0.5, y+0.5)
    lies inside the contour. Degenerate polygons (collinear or sub-pixel)
    produce an empty mask and a DegeneratePolygonWarning."""
    bits = np.zeros((height, width), dtype=bool)
    pts = poly.points
    n = len(pts)
    ys = [p[1] for p in pts]
    y_lo = max(0, int(np.floor(min(ys) - 0.5)))
    y_hi = min(height - 1, int(np.ceil(max(ys))))
    for iy in range(y_lo, y_hi + 1):
        yc = iy + 0.5
        crossings = []
        for i in range(n):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % n]
            if (y1 > yc) != (y2 > yc):
                crossings.append(x1 + (yc - y1) * (x2 - x1) / (y2 - y1))
        crossings.sort()
        for a, b in zip(crossings[::2], crossings[1::2]):
            start = max(0, int(np.ceil(a - 0.5)))
            stop = min(width, int(np.ceil(b - 0.5)))
            if start < stop:
                bits[iy, start:stop] = True
    if not bits.any():
        warnings.warn(
            "polygon rasterized to an empty mask (collinear or sub-pixel contour)",
            DegeneratePolygonWarning,
            stacklevel=2,
        )
    return bits


def remove_noise(mask: PixelMask, min_area: int = DEFAULT_MIN_NOISE_AREA) -> PixelMask:
    """Delete 8-connected object components smaller than min_area.

    The largest component always survives, so the filter can never wipe
    the annotation entirely.
    """
    if min_area < 1:
        raise ValueError(f"min_area must be >= 1, got {min_area}")
    labels, count = ndimage.label(mask.object_bits, structure=EIGHT_CONNECTED)
    if count == 0:
        return mask
    areas = np.bincount(labels.ravel())[1:]
    keep = np.zeros(count + 1, dtype=bool)
    keep[1:] = areas >= min_area
    keep[int(np.argmax(areas)) + 1] = True
    return mask.with_object_bits(keep[labels])


def fill_holes(mask: PixelMask) -> PixelMask:
    """Turn enclosed background into object pixels.

    Background components (4-connected) that cannot reach the image
    border are holes; everything else stays background.
    """
    background = ~mask.object_bits
    labels, count = ndimage.label(background, structure=FOUR_CONNECTED)
    if count == 0:
        return mask
    border_labels = np.unique(
        np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    )
    open_to_border = np.zeros(count + 1, dtype=bool)
    open_to_border[border_labels] = True
    holes = background & ~open_to_border[labels]
    return mask.with_object_bits(mask.object_bits | holes)


def add_dontcare_border(mask: PixelMask, width: float) -> PixelMask:
    """Synthesize the ambiguity band: dilate the object raster by a disc
    of radius `width` and keep the ring outside the object. Width 0
    clears the band."""
    if width < 0:
        raise ValueError(f"border width must be >= 0, got {width}")
    obj = mask.object_bits
    if width == 0 or not obj.any():
        return PixelMask(obj)
    distance = ndimage.distance_transform_edt(~obj)
    band = (distance <= width) & ~obj
    return PixelMask(obj, band)


def mask_to_bbox(mask: PixelMask) -> BoundingBox:
    """Tightest half-open box around the object pixels; the don't-care
    band is excluded."""
    ys, xs = np.nonzero(mask.object_bits)
    if ys.size == 0:
        raise EmptyMask("mask has no object pixels")
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
