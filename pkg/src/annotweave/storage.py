"""Project persistence: directory scanning, annotation CSV, masks, backups.

The on-disk layout of a project root:

    annotations.csv       one line per object per frame (formats below)
    <stem>_mask.png       per-frame grayscale ID image (pixel projects)
    mask.png              optional region-of-interest raster (here or in
                          the parent directory; this one wins)
    suggested_tags.txt    one tag per line
    meta_fields.txt       one meta flag name per line
    settings.json         file pattern, geometry kind, modality config
    backup/               timestamped copies of annotations.csv
    .annotweave.lock      advisory single-writer lock

CSV formats (delimiter `;`, UTF-8, header row, `\n` line ends):

    box:    frame;id;tag;ul_x;ul_y;lr_x;lr_y;status;<meta flags...>
    pixel:  frame;mask_file;id;tag;status;<meta flags...>

Box rows store the lower-right corner as an inclusive pixel; in memory
boxes are half-open, so saving subtracts 1 and loading adds it back.
Status is `active` or `lastframe`; meta flags are `0`/`1` in schema order.
Rows are sorted by (frame, id), which makes the serialization canonical:
saving, loading, and saving again reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import shutil
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import (
    BadPattern,
    CorruptCsv,
    DuplicateName,
    FieldInUse,
    IoFailure,
    NoMatchesWarning,
    ProjectLocked,
)
from .masks.idcodec import decode_id_image, encode_id_image
from .masks.ops import rasterize_polygon
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
)

ANNOTATIONS_FILE = "annotations.csv"
ROI_MASK_FILE = "mask.png"
TAGS_FILE = "suggested_tags.txt"
META_FILE = "meta_fields.txt"
SETTINGS_FILE = "settings.json"
BACKUP_DIR = "backup"
LOCK_FILE = ".annotweave.lock"

_BOX_COLUMNS = ["frame", "id", "tag", "ul_x", "ul_y", "lr_x", "lr_y", "status"]
_PIXEL_COLUMNS = ["frame", "mask_file", "id", "tag", "status"]
_STATUS_TO_TEXT = {ObjectStatus.ACTIVE: "active", ObjectStatus.LAST_FRAME_REACHED: "lastframe"}
_TEXT_TO_STATUS = {v: k for k, v in _STATUS_TO_TEXT.items()}


def natural_sort_key(name: str):
    """Numeric-aware ordering key: frame_9 sorts before frame_10."""
    parts = re.split(r"(\d+)", name)
    return tuple((0, int(p)) if p.isdigit() else (1, p.lower()) for p in parts if p != "")


def scan_frames(directory, pattern: Optional[str]) -> list[str]:
    """File names under `directory` matching the glob-or-regex pattern,
    natural-sorted ascending.

    A pattern that compiles as a regular expression is used as one
    (full match on the name); otherwise it is a glob wildcard. An empty
    pattern matches everything. No match is not an error: the list is
    empty and a NoMatchesWarning fires.
    """
    directory = Path(directory)
    names = sorted(p.name for p in directory.iterdir() if p.is_file())
    matcher = _pattern_matcher(pattern)
    out = sorted((n for n in names if matcher(n)), key=natural_sort_key)
    if not out:
        warnings.warn(
            f"pattern {pattern!r} matched no files in {directory}",
            NoMatchesWarning,
            stacklevel=2,
        )
    return out


def _pattern_matcher(pattern: Optional[str]):
    if not pattern:
        return lambda name: True
    try:
        rx = re.compile(pattern)
        return lambda name: rx.fullmatch(name) is not None
    except re.error as err:
        if any(ch in pattern for ch in "*?["):
            return lambda name: fnmatchcase(name, pattern)
        raise BadPattern(f"pattern {pattern!r} is not a regex or glob: {err}") from err


@dataclass(frozen=True)
class ProjectSettings:
    """Sidecar configuration persisted as settings.json."""

    file_pattern: str = "*.png"
    geometry_kind: GeometryKind = GeometryKind.BOX
    limit_tags: bool = False
    dontcare_border_width: int = 0
    thermal_dir: Optional[str] = None
    thermal_pattern: str = "*.png"
    homography_file: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "file_pattern": self.file_pattern,
            "geometry_kind": self.geometry_kind.value,
            "limit_tags": self.limit_tags,
            "dontcare_border_width": self.dontcare_border_width,
            "thermal_dir": self.thermal_dir,
            "thermal_pattern": self.thermal_pattern,
            "homography_file": self.homography_file,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProjectSettings":
        kind = doc.get("geometry_kind", "box")
        return cls(
            file_pattern=doc.get("file_pattern", "*.png"),
            geometry_kind=GeometryKind(kind),
            limit_tags=bool(doc.get("limit_tags", False)),
            dontcare_border_width=int(doc.get("dontcare_border_width", 0)),
            thermal_dir=doc.get("thermal_dir"),
            thermal_pattern=doc.get("thermal_pattern", "*.png"),
            homography_file=doc.get("homography_file"),
        )


def load_settings(root) -> ProjectSettings:
    path = Path(root) / SETTINGS_FILE
    if not path.exists():
        return ProjectSettings()
    return ProjectSettings.from_json(json.loads(path.read_text(encoding="utf-8")))


def save_settings(root, settings: ProjectSettings) -> None:
    payload = json.dumps(settings.to_json(), indent=2, sort_keys=True) + "\n"
    _atomic_bytes(Path(root) / SETTINGS_FILE, payload.encode("utf-8"))


def _is_reserved_name(name: str) -> bool:
    # outputs of this tool living next to the frames
    return name == ROI_MASK_FILE or name.endswith("_mask.png")


@dataclass
class LoadedProject:
    project: Project
    store: AnnotationStore
    problems: list[str] = field(default_factory=list)


def load_project(root, settings: Optional[ProjectSettings] = None) -> LoadedProject:
    """Open a project root: frames, sidecars, ROI mask, and annotations.

    Pixel projects also pull in the per-frame ID mask images the CSV
    references; a missing mask image drops those rows and is collected in
    ``problems`` instead of failing the whole load.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"project root {root} does not exist")
    if settings is None:
        settings = load_settings(root)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoMatchesWarning)
        scanned = scan_frames(root, settings.file_pattern)
    frame_files = tuple(n for n in scanned if not _is_reserved_name(n))

    user_tags = _read_lines(root / TAGS_FILE)
    sidecar_meta = _read_lines(root / META_FILE)
    roi = _load_roi_mask(root)

    problems: list[str] = []
    csv_path = root / ANNOTATIONS_FILE
    geometry_kind = settings.geometry_kind
    if csv_path.exists():
        rows, header_meta, is_pixel = _read_csv(csv_path)
        if is_pixel is not None:
            geometry_kind = GeometryKind.PIXEL if is_pixel else GeometryKind.BOX
        meta_schema = tuple(sidecar_meta) if sidecar_meta else tuple(header_meta)
        frames, image_size = _assemble_frames(
            root, rows, header_meta, meta_schema, frame_files, bool(is_pixel), problems
        )
    else:
        meta_schema = tuple(sidecar_meta)
        frames, image_size = {}, None

    if image_size is None and roi is not None:
        image_size = (roi.shape[1], roi.shape[0])
    if image_size is None:
        image_size = _probe_image_size(root, frame_files)

    store = AnnotationStore(frame_files, frames, image_size)
    suggested = _merge_tags(user_tags, store.all_tags())
    thermal = (
        Modality(settings.thermal_dir, settings.thermal_pattern)
        if settings.thermal_dir
        else None
    )
    project = Project(
        root_dir=root,
        frame_files=frame_files,
        geometry_kind=geometry_kind,
        meta_schema=meta_schema,
        suggested_tags=suggested,
        limit_tags=settings.limit_tags,
        modalities=Modalities(Modality(".", settings.file_pattern), thermal),
        dontcare_mask=roi,
    )
    return LoadedProject(project, store, problems)


def save_project(project: Project, store: AnnotationStore) -> list[Path]:
    """Write annotations, mask images, and sidecars atomically.

    Returns the paths written. Rows are emitted sorted by (frame, id);
    pixel projects render one ID image per frame, rasterizing polygon
    objects onto it.
    """
    root = Path(project.root_dir)
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if project.geometry_kind is GeometryKind.BOX:
        payload = _box_csv(project, store)
    else:
        payload, images = _pixel_csv(project, store)
        for name, raster in images:
            path = root / name
            _atomic_bytes(path, _png_bytes(raster))
            written.append(path)

    csv_path = root / ANNOTATIONS_FILE
    _atomic_bytes(csv_path, payload.encode("utf-8"))
    written.append(csv_path)

    for name, lines in ((TAGS_FILE, project.suggested_tags), (META_FILE, project.meta_schema)):
        path = root / name
        _atomic_bytes(path, ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))
        written.append(path)

    # keep the root self-describing; UI-only fields of an existing
    # settings file (border width, thermal config) are preserved
    current = load_settings(root)
    save_settings(
        root,
        replace(
            current,
            file_pattern=project.modalities.rgb.pattern,
            geometry_kind=project.geometry_kind,
            limit_tags=project.limit_tags,
        ),
    )
    written.append(root / SETTINGS_FILE)
    return written


def mask_file_name(image_file: str) -> str:
    return f"{Path(image_file).stem}_mask.png"


def backup_annotations(root, now: Optional[datetime] = None) -> Optional[Path]:
    """Copy annotations.csv into backup/ with a timestamped name.

    Called on every project open. Never overwrites: a second backup in
    the same second gets a -2/-3/... suffix. Returns None (and does
    nothing) when there is no annotations file yet.
    """
    root = Path(root)
    source = root / ANNOTATIONS_FILE
    if not source.exists():
        return None
    stamp = (now or datetime.now()).strftime("%Y%m%d-%H%M%S")
    backup_dir = root / BACKUP_DIR
    try:
        backup_dir.mkdir(exist_ok=True)
        target = backup_dir / f"annotations_{stamp}.csv"
        counter = 2
        while target.exists():
            target = backup_dir / f"annotations_{stamp}-{counter}.csv"
            counter += 1
        shutil.copyfile(source, target)
    except OSError as err:
        raise IoFailure(f"backup failed: {err}") from err
    return target


def edit_suggested_tags(
    project: Project, new_tags: list[str], store: Optional[AnnotationStore] = None
) -> Project:
    """Replace the user tag list; the effective suggestions stay a union
    with every tag already used in the store. Persists the sidecar."""
    _check_names(new_tags)
    used = store.all_tags() if store is not None else set()
    merged = _merge_tags(list(new_tags), used)
    updated = replace(project, suggested_tags=merged)
    _atomic_bytes(
        Path(project.root_dir) / TAGS_FILE,
        ("\n".join(merged) + ("\n" if merged else "")).encode("utf-8"),
    )
    return updated


def edit_meta_schema(
    project: Project,
    new_names: list[str],
    store: Optional[AnnotationStore] = None,
    confirm_removals: bool = False,
) -> tuple[Project, Optional[AnnotationStore]]:
    """Replace the meta-field schema and reconcile existing objects.

    Removing a field that objects still carry requires confirm_removals,
    otherwise FieldInUse is raised; added fields default to False
    everywhere. Persists the sidecar.
    """
    _check_names(new_names)
    removed = set(project.meta_schema) - set(new_names)
    has_objects = store is not None and any(fa.objects for fa in store.frames.values())
    if removed and has_objects and not confirm_removals:
        raise FieldInUse(
            f"removing meta field(s) {sorted(removed)} affects existing objects; "
            "pass confirm_removals=True"
        )
    updated_store = store
    if store is not None:
        frames = {}
        for idx, fa in store.frames.items():
            objects = tuple(
                replace(o, meta={name: o.meta.get(name, False) for name in new_names})
                for o in fa.objects
            )
            frames[idx] = replace(fa, objects=objects)
        updated_store = replace(store, frames=frames)
    updated = replace(project, meta_schema=tuple(new_names))
    _atomic_bytes(
        Path(project.root_dir) / META_FILE,
        ("\n".join(new_names) + ("\n" if new_names else "")).encode("utf-8"),
    )
    return updated, updated_store


# --- advisory single-writer lock --------------------------------------------


class ProjectLock:
    """Advisory lock file guarding one writer per project root."""

    def __init__(self, root):
        self.path = Path(root) / LOCK_FILE
        self._held = False

    def acquire(self) -> "ProjectLock":
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ProjectLocked(
                f"{self.path.parent} is already opened for writing ({self.path})"
            ) from None
        with os.fdopen(fd, "w") as handle:
            handle.write(f"{os.getpid()}\n")
        self._held = True
        return self

    def release(self) -> None:
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False

    def __enter__(self):
        return self.acquire()

    def __exit__(self, *exc):
        self.release()


# --- internals ---------------------------------------------------------------


def _check_names(names: list[str]) -> None:
    if any(not n.strip() for n in names):
        raise DuplicateName("names must be non-empty")
    seen = set()
    for name in names:
        if name in seen:
            raise DuplicateName(f"duplicate name {name!r}")
        seen.add(name)


def _merge_tags(user_tags: list[str], used: set[str]) -> tuple[str, ...]:
    extras = sorted(used - set(user_tags))
    return tuple(user_tags) + tuple(extras)


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        return []
    return [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]


def _load_roi_mask(root: Path) -> Optional[np.ndarray]:
    for candidate in (root / ROI_MASK_FILE, root.parent / ROI_MASK_FILE):
        if candidate.exists():
            return np.asarray(Image.open(candidate).convert("L")) > 127
    return None


def _probe_image_size(root: Path, frame_files: tuple[str, ...]) -> Optional[tuple[int, int]]:
    for name in frame_files:
        path = root / name
        if path.exists():
            try:
                with Image.open(path) as img:
                    return img.size
            except OSError:
                continue
    return None


def _png_bytes(raster: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def write_roi_mask(path, bits: np.ndarray) -> None:
    raster = np.where(np.asarray(bits, dtype=bool), 255, 0).astype(np.uint8)
    _atomic_bytes(Path(path), _png_bytes(raster))


def _atomic_bytes(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    except OSError as err:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"write to {path} failed: {err}") from err


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=";", lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _meta_cells(obj: AnnotatedObject, schema: tuple[str, ...]) -> list[str]:
    return ["1" if obj.meta.get(name, False) else "0" for name in schema]


def _box_csv(project: Project, store: AnnotationStore) -> str:
    header = _BOX_COLUMNS + list(project.meta_schema)
    rows = []
    for fa in store.nonempty_frames():
        for obj in sorted(fa.objects, key=lambda o: o.id):
            box = obj.geometry
            if not isinstance(box, BoundingBox):
                raise IoFailure(
                    f"box project holds {type(box).__name__} geometry (frame {fa.frame_index})"
                )
            rows.append(
                [
                    str(fa.frame_index),
                    str(obj.id),
                    obj.tag,
                    str(box.ul_x),
                    str(box.ul_y),
                    str(box.lr_x - 1),  # inclusive lower-right on disk
                    str(box.lr_y - 1),
                    _STATUS_TO_TEXT[obj.status],
                ]
                + _meta_cells(obj, project.meta_schema)
            )
    return _csv_text(header, rows)


def _pixel_csv(
    project: Project, store: AnnotationStore
) -> tuple[str, list[tuple[str, np.ndarray]]]:
    size = store.image_size
    if size is None:
        size = _probe_image_size(Path(project.root_dir), project.frame_files)
    if size is None:
        raise IoFailure("pixel project needs a known image size to render mask images")
    width, height = size

    header = _PIXEL_COLUMNS + list(project.meta_schema)
    rows: list[list[str]] = []
    images: list[tuple[str, np.ndarray]] = []
    for fa in store.nonempty_frames():
        if not fa.objects:
            continue  # a band with no owning objects is not persistable
        mask_name = mask_file_name(fa.image_file)
        masks: list[tuple[int, PixelMask]] = []
        for obj in sorted(fa.objects, key=lambda o: o.id):
            masks.append((obj.id, _as_pixel_mask(obj.geometry, width, height)))
            rows.append(
                [
                    str(fa.frame_index),
                    mask_name,
                    str(obj.id),
                    obj.tag,
                    _STATUS_TO_TEXT[obj.status],
                ]
                + _meta_cells(obj, project.meta_schema)
            )
        images.append(
            (mask_name, encode_id_image(masks, width, height, fa.shared_dontcare))
        )
    return _csv_text(header, rows), images


def _as_pixel_mask(geometry, width: int, height: int) -> PixelMask:
    if isinstance(geometry, PixelMask):
        return geometry
    if isinstance(geometry, Polygon):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return PixelMask(rasterize_polygon(geometry, width, height))
    raise IoFailure(f"pixel project holds {type(geometry).__name__} geometry")


def _read_csv(path: Path) -> tuple[list[dict], list[str], Optional[bool]]:
    text = path.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text), delimiter=";")
    try:
        header = next(reader)
    except StopIteration:
        return [], [], None
    if header[: len(_PIXEL_COLUMNS)] == _PIXEL_COLUMNS:
        is_pixel = True
        fixed = _PIXEL_COLUMNS
    elif header[: len(_BOX_COLUMNS)] == _BOX_COLUMNS:
        is_pixel = False
        fixed = _BOX_COLUMNS
    else:
        raise CorruptCsv(f"unrecognized header {header!r}", line=1)
    meta_names = header[len(fixed) :]

    rows = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise CorruptCsv(
                f"expected {len(header)} fields, got {len(cells)}", line=line_no
            )
        row = dict(zip(header, cells))
        row["_line"] = line_no
        rows.append(row)
    return rows, meta_names, is_pixel


def _parse_int(row: dict, column: str) -> int:
    try:
        return int(row[column])
    except ValueError:
        raise CorruptCsv(
            f"{row[column]!r} is not an integer", line=row["_line"], column=column
        ) from None


def _parse_status(row: dict) -> ObjectStatus:
    try:
        return _TEXT_TO_STATUS[row["status"]]
    except KeyError:
        raise CorruptCsv(
            f"unknown status {row['status']!r}", line=row["_line"], column="status"
        ) from None


def _parse_meta(row: dict, header_meta: list[str], schema: tuple[str, ...]) -> dict[str, bool]:
    meta = {}
    for name in schema:
        raw = row.get(name)
        if raw is None:
            meta[name] = False  # field added after this file was written
        elif raw in ("0", "1"):
            meta[name] = raw == "1"
        else:
            raise CorruptCsv(
                f"meta flag must be 0 or 1, got {raw!r}", line=row["_line"], column=name
            )
    return meta


def _assemble_frames(
    root: Path,
    rows: list[dict],
    header_meta: list[str],
    schema: tuple[str, ...],
    frame_files: tuple[str, ...],
    is_pixel: bool,
    problems: list[str],
) -> tuple[dict[int, FrameAnnotations], Optional[tuple[int, int]]]:
    frames: dict[int, FrameAnnotations] = {}
    image_size: Optional[tuple[int, int]] = None
    by_frame: dict[int, list[dict]] = {}
    for row in rows:
        by_frame.setdefault(_parse_int(row, "frame"), []).append(row)

    for frame_idx in sorted(by_frame):
        frame_rows = by_frame[frame_idx]
        if not 0 <= frame_idx < len(frame_files):
            raise CorruptCsv(
                f"frame index {frame_idx} outside the {len(frame_files)}-frame sequence",
                line=frame_rows[0]["_line"],
                column="frame",
            )
        image_file = frame_files[frame_idx]
        objects: list[AnnotatedObject] = []
        shared = None

        if is_pixel:
            mask_path = root / frame_rows[0]["mask_file"]
            if not mask_path.exists():
                problems.append(f"missing mask image {mask_path.name} (frame {frame_idx})")
                continue
            raster = np.asarray(Image.open(mask_path).convert("L"))
            if image_size is None:
                image_size = (raster.shape[1], raster.shape[0])
            decoded = decode_id_image(raster)
            masks = dict(decoded.objects)
            shared = decoded.shared_dontcare
            for row in frame_rows:
                object_id = _parse_int(row, "id")
                mask = masks.pop(object_id, None)
                if mask is None:
                    problems.append(
                        f"ID {object_id} listed in CSV but absent from "
                        f"{mask_path.name} (frame {frame_idx})"
                    )
                    continue
                objects.append(
                    AnnotatedObject(
                        id=object_id,
                        tag=row["tag"],
                        geometry=mask,
                        status=_parse_status(row),
                        meta=_parse_meta(row, header_meta, schema),
                    )
                )
            for orphan in sorted(masks):
                problems.append(
                    f"ID {orphan} present in {mask_path.name} but not in the CSV "
                    f"(frame {frame_idx}); ignored"
                )
        else:
            for row in frame_rows:
                box = BoundingBox(
                    _parse_int(row, "ul_x"),
                    _parse_int(row, "ul_y"),
                    _parse_int(row, "lr_x") + 1,  # inclusive on disk
                    _parse_int(row, "lr_y") + 1,
                )
                objects.append(
                    AnnotatedObject(
                        id=_parse_int(row, "id"),
                        tag=row["tag"],
                        geometry=box,
                        status=_parse_status(row),
                        meta=_parse_meta(row, header_meta, schema),
                    )
                )

        if objects or (shared is not None and shared.any()):
            frames[frame_idx] = FrameAnnotations(
                frame_idx, image_file, tuple(objects), shared
            )
    return frames, image_size
