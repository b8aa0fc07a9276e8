"""Mapping between the RGB master modality and the thermal modality.

A single planar homography per direction; annotations are stored in RGB
coordinates and projected into the thermal view on demand. Homography
files use the OpenCV FileStorage YAML layout with `homRgbToT` and
`homTToRgb` matrix entries.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    DerivedHomographyWarning,
    MalformedMatrix,
    MissingKey,
    OutOfView,
    PointAtInfinity,
    SingularMatrix,
)
from .model import BoundingBox, PixelMask

_W_EPS = 1e-12

KEY_RGB_TO_THERMAL = "homRgbToT"
KEY_THERMAL_TO_RGB = "homTToRgb"


class Direction(Enum):
    RGB_TO_THERMAL = "rgb_to_thermal"
    THERMAL_TO_RGB = "thermal_to_rgb"

    @property
    def flipped(self) -> "Direction":
        if self is Direction.RGB_TO_THERMAL:
            return Direction.THERMAL_TO_RGB
        return Direction.RGB_TO_THERMAL


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so matrix[2, 2] == 1 when nonzero."""

    matrix: np.ndarray
    direction: Direction

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise MalformedMatrix(f"homography must be 3x3, got {m.shape}")
        if abs(m[2, 2]) > _W_EPS:
            m = m / m[2, 2]
        if abs(np.linalg.det(m)) < _W_EPS:
            raise SingularMatrix("homography matrix is not invertible")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, direction: Direction = Direction.RGB_TO_THERMAL) -> "Homography":
        return cls(np.eye(3), direction)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix), self.direction.flipped)


def map_point(h: Homography, point: tuple[float, float]) -> tuple[float, float]:
    """Project one point; raises PointAtInfinity when w' vanishes."""
    x, y = point
    vec = h.matrix @ np.array([x, y, 1.0])
    if abs(vec[2]) < _W_EPS:
        raise PointAtInfinity(f"point {point} maps to infinity")
    return float(vec[0] / vec[2]), float(vec[1] / vec[2])


def map_box(
    h: Homography, box: BoundingBox, target_size: tuple[int, int]
) -> BoundingBox:
    """Axis-aligned hull of the four mapped corners, clipped to the target."""
    mapped = [map_point(h, c) for c in box.corners()]
    xs = [p[0] for p in mapped]
    ys = [p[1] for p in mapped]
    hull = BoundingBox(
        math.floor(min(xs)),
        math.floor(min(ys)),
        max(math.ceil(max(xs)), math.floor(min(xs)) + 1),
        max(math.ceil(max(ys)), math.floor(min(ys)) + 1),
    )
    clipped = hull.clip(*target_size)
    if clipped is None:
        raise OutOfView(f"box {box.as_tuple()} maps outside the target image")
    return clipped


def map_mask(h: Homography, mask: PixelMask, target_size: tuple[int, int]) -> PixelMask:
    """Inverse-warp with nearest-neighbor sampling.

    Every target pixel center is pulled back through h^-1 and reads the
    source pixel containing it; masks are label images, so no
    interpolation. Samples outside the source become background. The
    don't-care band warps identically.
    """
    tw, th = target_size
    inv = np.linalg.inv(h.matrix)
    ty, tx = np.mgrid[0:th, 0:tw]
    centers = np.stack(
        [tx.ravel() + 0.5, ty.ravel() + 0.5, np.ones(tw * th)], axis=0
    )
    src = inv @ centers
    w = src[2]
    valid = np.abs(w) > _W_EPS
    sx = np.full(tw * th, -1, dtype=np.int64)
    sy = np.full(tw * th, -1, dtype=np.int64)
    sx[valid] = np.floor(src[0, valid] / w[valid]).astype(np.int64)
    sy[valid] = np.floor(src[1, valid] / w[valid]).astype(np.int64)
    inside = valid & (sx >= 0) & (sx < mask.width) & (sy >= 0) & (sy < mask.height)

    def pull(bits: np.ndarray) -> np.ndarray:
        out = np.zeros(tw * th, dtype=bool)
        out[inside] = bits[sy[inside], sx[inside]]
        return out.reshape(th, tw)

    obj = pull(mask.object_bits)
    band = pull(mask.dontcare_bits) & ~obj
    return PixelMask(obj, band)


# --- homography file I/O ----------------------------------------------------


def load_homographies(
    path, derive_missing: bool = False
) -> tuple[Homography, Homography]:
    """Read (rgb->thermal, thermal->rgb) from an OpenCV-style YAML file.

    With derive_missing=True a single present matrix stands in for the
    absent one via inversion (warning emitted); otherwise a missing key
    raises MissingKey.
    """
    doc = _read_filestorage(Path(path))
    rgb_to_t = _matrix_from(doc, KEY_RGB_TO_THERMAL)
    t_to_rgb = _matrix_from(doc, KEY_THERMAL_TO_RGB)
    if rgb_to_t is None and t_to_rgb is None:
        raise MissingKey(
            f"{path}: neither {KEY_RGB_TO_THERMAL} nor {KEY_THERMAL_TO_RGB} present"
        )
    if rgb_to_t is None or t_to_rgb is None:
        missing = KEY_RGB_TO_THERMAL if rgb_to_t is None else KEY_THERMAL_TO_RGB
        if not derive_missing:
            raise MissingKey(f"{path}: missing key {missing}")
        warnings.warn(
            f"{path}: {missing} absent, derived by inverting the other matrix",
            DerivedHomographyWarning,
            stacklevel=2,
        )
    if rgb_to_t is not None:
        forward = Homography(rgb_to_t, Direction.RGB_TO_THERMAL)
    else:
        forward = Homography(t_to_rgb, Direction.THERMAL_TO_RGB).inverse()
    if t_to_rgb is not None:
        backward = Homography(t_to_rgb, Direction.THERMAL_TO_RGB)
    else:
        backward = Homography(rgb_to_t, Direction.RGB_TO_THERMAL).inverse()
    return forward, backward


def save_homographies(path, rgb_to_thermal: Homography, thermal_to_rgb: Homography) -> None:
    """Write the OpenCV FileStorage YAML layout the loader accepts."""
    lines = ["%YAML:1.0", "---"]
    for key, h in (
        (KEY_RGB_TO_THERMAL, rgb_to_thermal),
        (KEY_THERMAL_TO_RGB, thermal_to_rgb),
    ):
        data = ", ".join(_fmt(v) for v in h.matrix.ravel())
        lines += [
            f"{key}: !!opencv-matrix",
            "   rows: 3",
            "   cols: 3",
            "   dt: d",
            f"   data: [ {data} ]",
        ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(value: float) -> str:
    text = repr(float(value))
    return text if ("e" in text or "." in text) else text + "."


def _read_filestorage(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    # PyYAML rejects OpenCV's %YAML:1.0 directive and the app-specific
    # !!opencv-matrix tag; strip both before parsing.
    lines = text.splitlines()
    if lines and lines[0].startswith("%YAML"):
        lines = lines[1:]
    cleaned = re.sub(r"!![\w:-]+", "", "\n".join(lines))
    try:
        doc = yaml.safe_load(cleaned)
    except yaml.YAMLError as err:
        raise MalformedMatrix(f"{path}: not parseable as YAML ({err})") from err
    if not isinstance(doc, dict):
        raise MissingKey(f"{path}: no mapping with homography keys found")
    return doc


def _matrix_from(doc: dict, key: str):
    if key not in doc:
        return None
    entry = doc[key]
    if not isinstance(entry, dict) or "data" not in entry:
        raise MalformedMatrix(f"{key}: expected a matrix mapping with a data list")
    rows = entry.get("rows")
    cols = entry.get("cols")
    data = entry["data"]
    if rows != 3 or cols != 3 or not isinstance(data, list) or len(data) != 9:
        raise MalformedMatrix(
            f"{key}: expected rows=3, cols=3 and 9 data values, "
            f"got rows={rows}, cols={cols}, len(data)={len(data) if isinstance(data, list) else 'n/a'}"
        )
    try:
        values = [float(v) for v in data]
    except (TypeError, ValueError) as err:
        raise MalformedMatrix(f"{key}: non-numeric data entry") from err
    return np.array(values, dtype=np.float64).reshape(3, 3)
