"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from annotweave.model import (
    AnnotatedObject,
    AnnotationStore,
    BoundingBox,
    FrameAnnotations,
    GeometryKind,
    Modalities,
    Modality,
    ObjectStatus,
    PixelMask,
    Project,
)


def make_project(
    kind=GeometryKind.BOX,
    n_frames=10,
    meta=(),
    tags=(),
    limit_tags=False,
    root="/tmp/proj",
) -> Project:
    return Project(
        root_dir=Path(root),
        frame_files=tuple(f"frame_{i:04d}.png" for i in range(n_frames)),
        geometry_kind=kind,
        meta_schema=tuple(meta),
        suggested_tags=tuple(tags),
        limit_tags=limit_tags,
        modalities=Modalities(Modality(".")),
    )


def box_obj(object_id, x1, y1, x2, y2, tag="car", status=ObjectStatus.ACTIVE, meta=None):
    return AnnotatedObject(
        id=object_id,
        tag=tag,
        geometry=BoundingBox(x1, y1, x2, y2),
        status=status,
        meta=dict(meta or {}),
    )


def mask_obj(object_id, bits, dontcare=None, tag="car", status=ObjectStatus.ACTIVE, meta=None):
    return AnnotatedObject(
        id=object_id,
        tag=tag,
        geometry=PixelMask(bits, dontcare),
        status=status,
        meta=dict(meta or {}),
    )


def make_store(project: Project, frame_objects: dict[int, list], image_size=None) -> AnnotationStore:
    frames = {
        idx: FrameAnnotations(idx, project.frame_files[idx], tuple(objs))
        for idx, objs in frame_objects.items()
        if objs
    }
    return AnnotationStore(project.frame_files, frames, image_size)


def square_mask(width, height, x, y, side) -> np.ndarray:
    bits = np.zeros((height, width), dtype=bool)
    bits[y : y + side, x : x + side] = True
    return bits


@pytest.fixture
def box_project():
    return make_project(GeometryKind.BOX, n_frames=12)


@pytest.fixture
def pixel_project():
    return make_project(GeometryKind.PIXEL, n_frames=6)
