"""Batch CLI: subcommands, exit codes, JSON reports."""

from __future__ import annotations

import json

import numpy as np
import pytest

from annotweave.cli import main
from annotweave.model import BoundingBox
from annotweave.storage import load_project, save_project

from .generators import random_box_project, random_pixel_project


@pytest.fixture
def box_root(tmp_path):
    rng = np.random.default_rng(211)
    project, store = random_box_project(rng, tmp_path / "proj")
    save_project(project, store)
    return tmp_path / "proj"


class TestValidate:
    def test_conformant_project_exit_0(self, box_root, capsys):
        assert main(["validate", str(box_root)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_violations_exit_1(self, box_root, capsys):
        csv_path = box_root / "annotations.csv"
        header = csv_path.read_text(encoding="utf-8").splitlines()[0]
        blanks = ";".join("0" for _ in header.split(";")[8:])
        row = "0;1;;2;2;8;8;active" + (";" + blanks if blanks else "")
        csv_path.write_text(header + "\n" + row + "\n", encoding="utf-8")
        assert main(["validate", str(box_root)]) == 1
        out = capsys.readouterr().out
        assert "tag" in out

    def test_json_report(self, box_root, capsys):
        assert main(["validate", str(box_root), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["findings"] == []

    def test_missing_root_exit_2(self, tmp_path, capsys):
        assert main(["validate", str(tmp_path / "nothere")]) == 2
        assert "error" in capsys.readouterr().err


class TestExports:
    def test_export_yolo_writes_labels(self, box_root, tmp_path, capsys):
        out = tmp_path / "labels"
        code = main(
            ["export-yolo", str(box_root), "--categories", "mscoco", "--out", str(out), "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["files"]) == 6
        for name in doc["files"]:
            text = (tmp_path / name).read_text(encoding="utf-8") if False else None
        assert all((out / f"frame_{i:04d}.txt").exists() for i in range(6))

    def test_export_coco_both_modes(self, tmp_path, capsys):
        rng = np.random.default_rng(223)
        project, store = random_pixel_project(rng, tmp_path / "pix")
        save_project(project, store)
        for mode in ("rle", "polygon"):
            out = tmp_path / f"coco_{mode}.json"
            code = main(
                ["export-coco", str(tmp_path / "pix"), "--mode", mode, "--out", str(out)]
            )
            assert code == 0
            doc = json.loads(out.read_text(encoding="utf-8"))
            assert set(doc) == {"images", "categories", "annotations"}

    def test_categories_from_file(self, box_root, tmp_path):
        cats = tmp_path / "mine.txt"
        cats.write_text("car\nperson\n", encoding="utf-8")
        out = tmp_path / "labels2"
        assert main(["export-yolo", str(box_root), "--categories", str(cats), "--out", str(out)]) == 0


class TestConvert:
    def test_convert_to_boxes_round_trip(self, tmp_path):
        rng = np.random.default_rng(227)
        project, store = random_pixel_project(rng, tmp_path / "pix")
        while not store.all_ids():
            project, store = random_pixel_project(rng, tmp_path / "pix")
        save_project(project, store)
        out_root = tmp_path / "boxes"
        assert main(["convert-to-boxes", str(tmp_path / "pix"), "--out", str(out_root)]) == 0
        # target root needs the frame images to be loadable as a project
        for name in project.frame_files:
            (out_root / name).write_bytes((tmp_path / "pix" / name).read_bytes())
        loaded = load_project(out_root)
        assert loaded.project.geometry_kind.value == "box"
        assert loaded.store.all_ids() == store.all_ids()


class TestInterpolateAndBackup:
    def test_interpolate_end_to_end(self, tmp_path):
        rng = np.random.default_rng(229)
        project, store = random_box_project(rng, tmp_path / "proj")
        from annotweave.model import AnnotatedObject, FrameAnnotations

        track = AnnotatedObject(id=40, tag="car", geometry=BoundingBox(10, 10, 20, 20))
        far = AnnotatedObject(id=40, tag="car", geometry=BoundingBox(30, 30, 40, 40))
        store = store.with_frame(store.frame(0).upsert(track))
        store = store.with_frame(store.frame(5).upsert(far))
        save_project(project, store)
        code = main(
            ["interpolate", str(tmp_path / "proj"), "--id", "40", "--from", "0", "--to", "5"]
        )
        assert code == 0
        loaded = load_project(tmp_path / "proj")
        for idx in (1, 2, 3, 4):
            assert loaded.store.frame(idx).get(40) is not None

    def test_backup_subcommand(self, box_root, capsys):
        assert main(["backup", str(box_root), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["backup"] is not None
        assert (box_root / "backup").exists()

    def test_backup_without_csv_is_noop(self, tmp_path, capsys):
        root = tmp_path / "empty"
        root.mkdir()
        assert main(["backup", str(root), "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["backup"] is None


class TestUsage:
    def test_unknown_subcommand_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate", "/tmp"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_required_flag_exit_2(self, box_root, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["export-yolo", str(box_root)])
        assert exc.value.code == 2
