"""Headless batch interface.

    annotweave validate <root> [--json]
    annotweave export-yolo <root> --categories <list> --out <dir> [--json]
    annotweave export-coco <root> --mode polygon|rle --out <file> [--json]
    annotweave convert-to-boxes <root> --out <root2> [--json]
    annotweave interpolate <root> --id N --from A --to B [--json]
    annotweave backup <root> [--json]
    annotweave serve [--port P] [--projects-root DIR]

Exit codes: 0 success, 1 validation findings, 2 I/O or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import AnnotweaveError, BadPattern, CorruptCsv, IoFailure
from .exporters import MaskMode, builtin_category_list, convert_pixel_to_box, export_coco, export_yolo
from .exporters.categories import parse_category_file
from .model import validate_object
from .sequence import interpolate
from .storage import backup_annotations, load_project, save_project


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annotweave", description="annotation project batch operations"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("root", help="project root directory")
        p.add_argument("--json", action="store_true", help="machine-readable report on stdout")
        return p

    add("validate", help="check every annotation against the project rules")

    p = add("export-yolo", help="write Darknet/YOLO label files")
    p.add_argument("--categories", required=True, help="category list name or .txt path")
    p.add_argument("--out", required=True, help="output directory")

    p = add("export-coco", help="write one COCO JSON document")
    p.add_argument("--mode", choices=["polygon", "rle"], default="rle")
    p.add_argument("--out", required=True, help="output file")
    p.add_argument("--categories", help="optional category list name or .txt path")

    p = add("convert-to-boxes", help="convert a pixel project to a box project")
    p.add_argument("--out", required=True, help="target project root")

    p = add("interpolate", help="linear-blend a box track between two keyframes")
    p.add_argument("--id", type=int, required=True, dest="object_id")
    p.add_argument("--from", type=int, required=True, dest="start")
    p.add_argument("--to", type=int, required=True, dest="end")

    add("backup", help="timestamped copy of annotations.csv into backup/")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--projects-root", default=None)
    return parser


def _category_list(spec: str, root: Path):
    path = Path(spec)
    if path.suffix == ".txt" and path.exists():
        return parse_category_file(path)
    for base in (root / "categoryLists", Path("categoryLists")):
        candidate = base / f"{spec}.txt"
        if candidate.exists():
            return parse_category_file(candidate)
    return builtin_category_list(spec)


def _emit(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    for line in report.get("lines", []):
        print(line)


def _run(args) -> tuple[int, dict]:
    root = Path(args.root)
    if args.command == "backup":
        target = backup_annotations(root)
        if target is None:
            return 0, {"backup": None, "lines": ["no annotations.csv, nothing to back up"]}
        return 0, {"backup": str(target), "lines": [f"backed up to {target}"]}

    loaded = load_project(root)
    project, store = loaded.project, loaded.store

    if args.command == "validate":
        findings = []
        for fa in store.nonempty_frames():
            for obj in fa.objects:
                for violation in validate_object(obj, project, store.image_size):
                    findings.append(
                        {"frame_index": fa.frame_index, "object_id": obj.id, "violation": violation}
                    )
        findings += [{"problem": p} for p in loaded.problems]
        lines = [
            f"frame {f['frame_index']} object {f['object_id']}: {f['violation']}"
            if "violation" in f
            else f["problem"]
            for f in findings
        ] or ["ok"]
        return (1 if findings else 0), {"findings": findings, "lines": lines}

    if args.command == "export-yolo":
        categories = _category_list(args.categories, root)
        result = export_yolo(store, project, categories, Path(args.out))
        report = {
            "files": [str(p) for p in result.files],
            "skipped": [
                {"frame_index": s.frame_index, "object_id": s.object_id, "reason": s.reason}
                for s in result.skipped
            ],
            "lines": [f"wrote {len(result.files)} label file(s), skipped {len(result.skipped)}"],
        }
        return 0, report

    if args.command == "export-coco":
        mode = MaskMode.POLYGON if args.mode == "polygon" else MaskMode.RLE
        categories = _category_list(args.categories, root) if args.categories else None
        result = export_coco(store, project, Path(args.out), mode, categories)
        return 0, {
            "path": str(result.path),
            "annotations": len(result.document["annotations"]),
            "skipped": len(result.skipped),
            "lines": [f"wrote {result.path} ({len(result.document['annotations'])} annotations)"],
        }

    if args.command == "convert-to-boxes":
        result = convert_pixel_to_box(store, project)
        out_root = Path(args.out)
        out_root.mkdir(parents=True, exist_ok=True)
        from dataclasses import replace

        new_project = replace(result.project, root_dir=out_root)
        save_project(new_project, result.store)
        return 0, {
            "out": str(out_root),
            "dropped": [{"frame_index": f, "object_id": i} for f, i in result.dropped],
            "lines": [f"converted into {out_root}, dropped {len(result.dropped)} empty mask(s)"],
        }

    if args.command == "interpolate":
        updated = interpolate(store, args.object_id, args.start, args.end)
        save_project(project, updated)
        created = list(range(args.start + 1, args.end))
        return 0, {
            "frames": created,
            "lines": [f"interpolated ID {args.object_id} across frames {created}"],
        }

    raise AnnotweaveError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        from .service import serve

        serve(port=args.port, projects_root=args.projects_root)
        return 0
    try:
        code, report = _run(args)
    except (IoFailure, CorruptCsv, BadPattern, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AnnotweaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(report, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
