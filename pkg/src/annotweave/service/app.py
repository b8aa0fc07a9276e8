"""HTTP API over the annotation engine.

Thin adapters only: every endpoint maps onto one module operation, and
every mutating call answers with the authoritative post-state of the
affected frame so clients never have to guess. Destructive sweeps
(delete-forward, merge-forward, meta-field removal) are two-phase: the
first call without `confirm` returns the affected-annotations report and
changes nothing.
"""

from __future__ import annotations

import io
import logging
import os
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from PIL import Image

from .. import errors as err
from ..exporters import MaskMode, builtin_category_list, export_coco, export_yolo
from ..exporters.categories import CategoryList, parse_category_file
from ..masks import (
    add_dontcare_border,
    apply_brush,
    fill_holes,
    grabcut_init,
    grabcut_refine,
    rasterize_polygon,
    remove_noise,
)
from ..model import (
    AnnotatedObject,
    GeometryKind,
    PixelMask,
    Polygon,
    next_free_id,
    validate_object,
)
from ..sequence import delete_forward, history_window, interpolate, merge_forward, retain
from ..storage import ProjectSettings, save_project, save_settings, scan_frames
from ..storage import edit_meta_schema, edit_suggested_tags
from . import schemas
from .sessions import NotFound, ProjectSession, SessionManager

log = logging.getLogger("annotweave.service")

_STATUS_BY_ERROR = [
    (NotFound, 404),
    (err.ProjectLocked, 423),
    (err.FieldInUse, 409),
    (err.IdSpaceExhausted, 409),
    (err.SameId, 422),
    (err.MissingKeyframe, 422),
    (err.NotBoxGeometry, 422),
    (err.DegenerateRect, 422),
    (err.EmptyMask, 422),
    (err.OverlappingObjects, 422),
    (err.UnknownId, 422),
    (err.ReservedId, 422),
    (err.DuplicateName, 422),
    (err.EmptyCategoryList, 422),
    (err.BadPattern, 422),
    (err.CorruptCsv, 422),
    (err.MissingKey, 422),
    (err.MalformedMatrix, 422),
    (err.SingularMatrix, 422),
    (err.IoFailure, 500),
]


def _error_response(exc: Exception) -> JSONResponse:
    status = 500
    for klass, code in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            status = code
            break
    else:
        if isinstance(exc, (ValueError, KeyError, IndexError)):
            status = 422
    envelope = {"code": type(exc).__name__, "message": str(exc), "details": {}}
    return JSONResponse(envelope, status_code=status)


def create_app(projects_root: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="annotweave", version="0.1.0")
    manager = SessionManager(Path(projects_root) if projects_root else None)
    app.state.manager = manager

    @app.exception_handler(err.AnnotweaveError)
    @app.exception_handler(ValueError)
    @app.exception_handler(KeyError)
    @app.exception_handler(IndexError)
    async def on_error(request: Request, exc: Exception):
        return _error_response(exc)

    @app.exception_handler(Exception)
    async def on_crash(request: Request, exc: Exception):
        log.exception("unhandled error on %s", request.url.path)
        return _error_response(exc)

    # --- project lifecycle -------------------------------------------------

    @app.post("/projects/open")
    def open_project(body: schemas.OpenProject):
        settings = ProjectSettings.from_json(body.settings) if body.settings else None
        session = manager.open(body.root, settings)
        return _project_info(session)

    @app.post("/projects/{pid}/close")
    def close_project(pid: str, body: schemas.CloseProject):
        session = manager.get(pid)
        with session.mutex:
            if body.save:
                save_project(session.project, session.store)
            manager.close(pid)
        return {"closed": True, "saved": body.save}

    @app.get("/projects/{pid}")
    def project_info(pid: str):
        return _project_info(manager.get(pid))

    @app.post("/projects/{pid}/save")
    def save(pid: str, body: schemas.SaveRequest):
        session = manager.get(pid)
        with session.mutex:
            written = save_project(session.project, session.store)
        return {"written": [p.name for p in written]}

    # --- frames and images ---------------------------------------------------

    @app.get("/projects/{pid}/frames")
    def frames(pid: str):
        session = manager.get(pid)
        return {
            "frames": [
                schemas.frame_json(session.store.frame(i))
                for i in range(session.store.num_frames)
            ]
        }

    @app.get("/projects/{pid}/frames/{idx}")
    def frame(pid: str, idx: int):
        session = manager.get(pid)
        return schemas.frame_json(session.store.frame(idx))

    @app.get("/projects/{pid}/frames/{idx}/image")
    def frame_image(pid: str, idx: int, modality: str = "rgb", preview: bool = False):
        session = manager.get(pid)
        session.store.check_index(idx)
        path = _image_path(session, idx, modality)
        if path is None or not path.exists():
            raise NotFound(f"no {modality} image for frame {idx}")
        if not preview:
            return Response(path.read_bytes(), media_type="image/png")
        with Image.open(path) as img:
            img = img.convert("RGB")
            img.thumbnail((256, 256))
            buf = io.BytesIO()
            img.save(buf, format="PNG")
        return Response(buf.getvalue(), media_type="image/png")

    @app.get("/projects/{pid}/homographies")
    def homographies(pid: str):
        session = manager.get(pid)
        name = session.settings.homography_file or "homographies.yml"
        path = session.root / name
        if not path.exists():
            raise NotFound(f"no homography file {name!r} in the project root")
        from ..registration import load_homographies

        forward, backward = load_homographies(path, derive_missing=True)
        return {
            "rgb_to_thermal": [[float(v) for v in row] for row in forward.matrix],
            "thermal_to_rgb": [[float(v) for v in row] for row in backward.matrix],
        }

    @app.get("/projects/{pid}/history")
    def history(pid: str, object_id: int, center: int, radius: int = 5):
        session = manager.get(pid)
        slots = history_window(session.store, object_id, center, radius)
        return {
            "slots": [
                None
                if slot is None
                else {"frame_index": slot[0], "box": schemas.geometry_json(slot[1])}
                for slot in slots
            ]
        }

    # --- annotation CRUD -----------------------------------------------------

    @app.get("/projects/{pid}/frames/{idx}/annotations")
    def annotations(pid: str, idx: int):
        session = manager.get(pid)
        return schemas.frame_json(session.store.frame(idx))

    @app.post("/projects/{pid}/frames/{idx}/annotations")
    def create_annotation(pid: str, idx: int, body: schemas.CreateAnnotation):
        session = manager.get(pid)
        with session.mutex:
            geometry = schemas.geometry_from_json(body.geometry)
            object_id = body.id
            if object_id is None:
                object_id = next_free_id(session.project, session.store.frames.values())
            meta = {name: body.meta.get(name, False) for name in session.project.meta_schema}
            obj = AnnotatedObject(
                id=object_id,
                tag=body.tag,
                geometry=geometry,
                status=schemas.status_from_text(body.status),
                meta=meta,
            )
            _check_valid(obj, session)
            frame = session.store.frame(idx)
            if frame.get(object_id) is not None:
                raise err.DuplicateName(f"frame {idx} already has object {object_id}")
            session.store = session.store.with_frame(frame.upsert(obj))
            return {"object": schemas.object_json(obj), "frame": _frame_state(session, idx)}

    @app.put("/projects/{pid}/frames/{idx}/annotations/{oid}")
    def update_annotation(pid: str, idx: int, oid: int, body: schemas.UpdateAnnotation):
        session = manager.get(pid)
        with session.mutex:
            obj = _require_object(session, idx, oid)
            if body.tag is not None:
                obj = replace(obj, tag=body.tag)
            if body.status is not None:
                obj = replace(obj, status=schemas.status_from_text(body.status))
            if body.meta is not None:
                merged = dict(obj.meta)
                merged.update(body.meta)
                obj = replace(
                    obj,
                    meta={n: merged.get(n, False) for n in session.project.meta_schema},
                )
            if body.geometry is not None:
                obj = obj.with_geometry(schemas.geometry_from_json(body.geometry))
            _check_valid(obj, session)
            session.store = session.store.with_frame(session.store.frame(idx).upsert(obj))
            return {"object": schemas.object_json(obj), "frame": _frame_state(session, idx)}

    @app.delete("/projects/{pid}/frames/{idx}/annotations/{oid}")
    def delete_annotation(pid: str, idx: int, oid: int):
        session = manager.get(pid)
        with session.mutex:
            _require_object(session, idx, oid)
            session.store = session.store.with_frame(session.store.frame(idx).without(oid))
            return {"frame": _frame_state(session, idx)}

    # --- mask operations -------------------------------------------------------

    @app.post("/projects/{pid}/frames/{idx}/annotations/{oid}/mask-op")
    def mask_op(pid: str, idx: int, oid: int, body: schemas.MaskOp):
        session = manager.get(pid)
        with session.mutex:
            obj = _require_object(session, idx, oid)
            mask = _as_mask(session, obj.geometry)
            if body.op == "apply_brush":
                if body.brush is None:
                    raise ValueError("apply_brush needs a brush")
                mask = apply_brush(mask, schemas.brush_from_json(body.brush))
            elif body.op == "remove_noise":
                mask = remove_noise(mask, body.min_area)
            elif body.op == "fill_holes":
                mask = fill_holes(mask)
            elif body.op == "dontcare_border":
                mask = add_dontcare_border(mask, body.width)
            obj = obj.with_geometry(mask)
            session.store = session.store.with_frame(session.store.frame(idx).upsert(obj))
            return {"object": schemas.object_json(obj), "frame": _frame_state(session, idx)}

    # --- GrabCut sessions --------------------------------------------------------

    @app.post("/projects/{pid}/grabcut/init")
    def grabcut_start(pid: str, body: schemas.GrabCutInit):
        session = manager.get(pid)
        with session.mutex:
            image = _load_rgb(session, body.frame_index)
            result = grabcut_init(image, tuple(body.rect), body.iterations)
            gc = session.add_grabcut(body.frame_index, result)
            return {
                "session": gc.token,
                "frame_index": body.frame_index,
                "mask_rle": schemas.rle_json(result.mask),
                "collapsed": result.collapsed,
            }

    @app.post("/projects/{pid}/grabcut/{token}/refine")
    def grabcut_step(pid: str, token: str, body: schemas.GrabCutRefine):
        session = manager.get(pid)
        with session.mutex:
            gc = session.grabcut_session(token)
            brushes = [schemas.brush_from_json(b) for b in body.brushes]
            result = grabcut_refine(gc.result.state, brushes, body.iterations)
            gc.result = result
            return {
                "mask_rle": schemas.rle_json(result.mask),
                "collapsed": result.collapsed,
                "brush_conflicts": result.brush_conflicts,
            }

    @app.post("/projects/{pid}/grabcut/{token}/commit")
    def grabcut_commit(pid: str, token: str, body: schemas.GrabCutCommit):
        session = manager.get(pid)
        with session.mutex:
            gc = session.grabcut_session(token)
            mask = PixelMask(gc.result.mask)
            if body.dontcare_width > 0:
                mask = add_dontcare_border(mask, body.dontcare_width)
            idx = gc.frame_index
            frame = session.store.frame(idx)
            if body.object_id is not None and frame.get(body.object_id) is not None:
                obj = frame.get(body.object_id).with_geometry(mask)
            else:
                object_id = body.object_id
                if object_id is None:
                    object_id = next_free_id(session.project, session.store.frames.values())
                meta = {n: body.meta.get(n, False) for n in session.project.meta_schema}
                obj = AnnotatedObject(id=object_id, tag=body.tag, geometry=mask, meta=meta)
            _check_valid(obj, session)
            session.store = session.store.with_frame(frame.upsert(obj))
            del session.grabcut[token]
            return {"object": schemas.object_json(obj), "frame": _frame_state(session, idx)}

    # --- temporal operations -------------------------------------------------------

    @app.post("/projects/{pid}/retain")
    def retain_frame(pid: str, body: schemas.RetainRequest):
        session = manager.get(pid)
        with session.mutex:
            session.store = retain(session.store, body.from_index, body.to_index)
            return {"frame": _frame_state(session, body.to_index)}

    @app.post("/projects/{pid}/interpolate")
    def interpolate_track(pid: str, body: schemas.InterpolateRequest):
        session = manager.get(pid)
        with session.mutex:
            session.store = interpolate(
                session.store, body.object_id, body.start_index, body.end_index
            )
            return {
                "frames": [
                    _frame_state(session, i)
                    for i in range(body.start_index, body.end_index + 1)
                ]
            }

    @app.post("/projects/{pid}/delete-forward")
    def delete_fwd(pid: str, body: schemas.DeleteForwardRequest):
        session = manager.get(pid)
        with session.mutex:
            updated, report = delete_forward(session.store, set(body.ids), body.from_index)
            payload = {
                "report": [{"frame_index": f, "object_id": i} for f, i in report],
                "applied": False,
            }
            if body.confirm:
                session.store = updated
                payload["applied"] = True
                payload["frame"] = _frame_state(session, body.from_index)
            return payload

    @app.post("/projects/{pid}/merge-forward")
    def merge_fwd(pid: str, body: schemas.MergeForwardRequest):
        session = manager.get(pid)
        with session.mutex:
            updated, changes = merge_forward(
                session.store, body.keep_id, body.absorb_id, body.from_index
            )
            payload = {
                "report": [
                    {"frame_index": c.frame_index, "action": c.action} for c in changes
                ],
                "applied": False,
            }
            if body.confirm:
                session.store = updated
                payload["applied"] = True
                payload["frame"] = _frame_state(session, body.from_index)
            return payload

    # --- exports -----------------------------------------------------------------

    @app.post("/projects/{pid}/export/yolo")
    def yolo(pid: str, body: schemas.ExportYoloRequest):
        session = manager.get(pid)
        categories = _category_list(session, body.categories)
        out_dir = _resolve_out(session, body.out_dir)
        result = export_yolo(session.store, session.project, categories, out_dir)
        return {
            "files": [p.name for p in result.files],
            "skipped": [
                {"frame_index": s.frame_index, "object_id": s.object_id, "reason": s.reason}
                for s in result.skipped
            ],
        }

    @app.post("/projects/{pid}/export/coco")
    def coco(pid: str, body: schemas.ExportCocoRequest):
        session = manager.get(pid)
        mode = MaskMode.POLYGON if body.mode == "polygon" else MaskMode.RLE
        categories = _category_list(session, body.categories) if body.categories else None
        out_path = _resolve_out(session, body.out_path)
        result = export_coco(session.store, session.project, out_path, mode, categories)
        return {
            "path": str(result.path),
            "annotations": len(result.document["annotations"]),
            "skipped": len(result.skipped),
        }

    # --- settings ------------------------------------------------------------------

    @app.get("/projects/{pid}/settings")
    def get_settings(pid: str):
        session = manager.get(pid)
        return _settings_json(session)

    @app.put("/projects/{pid}/settings")
    def put_settings(pid: str, body: schemas.SettingsUpdate):
        session = manager.get(pid)
        with session.mutex:
            if body.suggested_tags is not None:
                session.project = edit_suggested_tags(
                    session.project, body.suggested_tags, session.store
                )
            if body.meta_schema is not None:
                session.project, store = edit_meta_schema(
                    session.project,
                    body.meta_schema,
                    session.store,
                    confirm_removals=body.confirm_meta_removals,
                )
                if store is not None:
                    session.store = store
            settings = session.settings
            if body.limit_tags is not None:
                session.project = replace(session.project, limit_tags=body.limit_tags)
                settings = replace(settings, limit_tags=body.limit_tags)
            if body.dontcare_border_width is not None:
                settings = replace(settings, dontcare_border_width=body.dontcare_border_width)
            if body.file_pattern is not None:
                settings = replace(settings, file_pattern=body.file_pattern)
            session.settings = settings
            save_settings(session.root, settings)
            return _settings_json(session)

    return app


# --- helpers ---------------------------------------------------------------------


def _project_info(session: ProjectSession) -> dict:
    project = session.project
    return {
        "project_id": session.id,
        "root": str(project.root_dir),
        "geometry_kind": project.geometry_kind.value,
        "num_frames": len(project.frame_files),
        "frame_files": list(project.frame_files),
        "meta_schema": list(project.meta_schema),
        "suggested_tags": list(project.suggested_tags),
        "limit_tags": project.limit_tags,
        "image_size": list(session.store.image_size) if session.store.image_size else None,
        "has_thermal": session.settings.thermal_dir is not None,
        "has_roi_mask": project.dontcare_mask is not None,
        "problems": session.problems,
        "dontcare_border_width": session.settings.dontcare_border_width,
    }


def _settings_json(session: ProjectSession) -> dict:
    doc = session.settings.to_json()
    doc["suggested_tags"] = list(session.project.suggested_tags)
    doc["meta_schema"] = list(session.project.meta_schema)
    return doc


def _frame_state(session: ProjectSession, idx: int) -> dict:
    return schemas.frame_json(session.store.frame(idx))


def _require_object(session: ProjectSession, idx: int, oid: int) -> AnnotatedObject:
    obj = session.store.frame(idx).get(oid)
    if obj is None:
        raise NotFound(f"frame {idx} has no object {oid}")
    return obj


def _check_valid(obj: AnnotatedObject, session: ProjectSession) -> None:
    violations = validate_object(obj, session.project, session.store.image_size)
    if violations:
        raise ValueError("; ".join(violations))


def _as_mask(session: ProjectSession, geometry) -> PixelMask:
    if isinstance(geometry, PixelMask):
        return geometry
    if isinstance(geometry, Polygon):
        size = session.store.image_size
        if size is None:
            raise err.IoFailure("image size unknown; cannot rasterize polygon")
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return PixelMask(rasterize_polygon(geometry, size[0], size[1]))
    raise err.NotBoxGeometry("mask operations need mask or polygon geometry")


def _image_path(session: ProjectSession, idx: int, modality: str) -> Optional[Path]:
    if modality == "rgb":
        return session.root / session.project.frame_files[idx]
    if modality == "thermal":
        thermal = session.project.modalities.thermal
        if thermal is None:
            return None
        directory = session.root / thermal.directory
        if not directory.is_dir():
            return None
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            names = scan_frames(directory, thermal.pattern)
        if idx >= len(names):
            return None
        return directory / names[idx]
    raise ValueError(f"unknown modality {modality!r}")


def _load_rgb(session: ProjectSession, idx: int) -> np.ndarray:
    session.store.check_index(idx)
    path = session.root / session.project.frame_files[idx]
    if not path.exists():
        raise NotFound(f"image file {path.name} missing for frame {idx}")
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def _category_list(session: ProjectSession, spec: str) -> CategoryList:
    path = Path(spec)
    if path.suffix == ".txt" and path.exists():
        return parse_category_file(path)
    site = session.root / "categoryLists" / f"{spec}.txt"
    if site.exists():
        return parse_category_file(site)
    local = Path("categoryLists") / f"{spec}.txt"
    if local.exists():
        return parse_category_file(local)
    try:
        return builtin_category_list(spec)
    except FileNotFoundError:
        raise NotFound(f"no category list named {spec!r}") from None


def _resolve_out(session: ProjectSession, out: str) -> Path:
    path = Path(out)
    if not path.is_absolute():
        path = session.root / path
    return path


def serve(port: Optional[int] = None, projects_root: Optional[str] = None) -> None:
    """Run the HTTP service (flags override PORT / PROJECTS_ROOT env vars)."""
    import uvicorn

    app = create_app(projects_root or os.environ.get("PROJECTS_ROOT"))
    uvicorn.run(app, host="127.0.0.1", port=port or int(os.environ.get("PORT", "8077")))
