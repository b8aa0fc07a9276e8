"""Annotation workbench for sequential RGB/thermal image pairs.

Core engine for bounding-box, polygon, and pixel-mask annotation with
GrabCut-assisted segmentation, temporal editing, standard-format export,
an HTTP service, and a batch CLI.
"""

__version__ = "0.1.0"

from .model import (
    AnnotatedObject,
    AnnotationStore,
    BoundingBox,
    FrameAnnotations,
    GeometryKind,
    Modalities,
    Modality,
    ObjectStatus,
    PixelMask,
    Polygon,
    Project,
    next_free_id,
    validate_object,
)

__all__ = [
    "AnnotatedObject",
    "AnnotationStore",
    "BoundingBox",
    "FrameAnnotations",
    "GeometryKind",
    "Modalities",
    "Modality",
    "ObjectStatus",
    "PixelMask",
    "Polygon",
    "Project",
    "next_free_id",
    "validate_object",
]
