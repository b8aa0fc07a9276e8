"""YOLO labels, COCO JSON (RLE and polygon modes), category lists."""

from __future__ import annotations

import numpy as np
import pytest

from annotweave.errors import DuplicateName, EmptyCategoryList, EmptyCategoryFileWarning
from annotweave.exporters import (
    CategoryList,
    MaskMode,
    builtin_category_list,
    convert_pixel_to_box,
    export_coco,
    export_yolo,
    load_category_lists,
    polygon_area,
    rle_encode,
    trace_boundaries,
)
from annotweave.model import BoundingBox, GeometryKind, PixelMask, Polygon

from .conftest import box_obj, make_project, make_store, mask_obj, square_mask
from .oracles import rle_decode
from .test_sequence import poly_obj

CATS = CategoryList("test", ("person", "car", "bus"))


class TestYolo:
    def test_full_frame_box_golden_line(self, tmp_path):
        project = make_project(n_frames=1)
        store = make_store(
            project, {0: [box_obj(1, 0, 0, 640, 480, tag="person")]}, image_size=(640, 480)
        )
        result = export_yolo(store, project, CATS, tmp_path)
        text = result.files[0].read_text(encoding="utf-8")
        assert text == "0 0.500000 0.500000 1.000000 1.000000\n"

    def test_hand_computed_normalization(self, tmp_path):
        # (32,24)-(352,264) in 640x480: center (192,144), size (320,240)
        project = make_project(n_frames=1)
        store = make_store(
            project, {0: [box_obj(1, 32, 24, 352, 264, tag="car")]}, image_size=(640, 480)
        )
        result = export_yolo(store, project, CATS, tmp_path)
        text = result.files[0].read_text(encoding="utf-8")
        assert text == "1 0.300000 0.300000 0.500000 0.500000\n"

    def test_unmapped_tag_skipped_and_reported(self, tmp_path):
        project = make_project(n_frames=1)
        store = make_store(
            project, {0: [box_obj(1, 0, 0, 10, 10, tag="unicorn")]}, image_size=(64, 64)
        )
        result = export_yolo(store, project, CATS, tmp_path)
        assert result.files[0].read_text(encoding="utf-8") == ""
        assert len(result.skipped) == 1
        assert "unicorn" in result.skipped[0].reason

    def test_one_file_per_frame_even_empty(self, tmp_path):
        project = make_project(n_frames=3)
        store = make_store(
            project, {1: [box_obj(1, 0, 0, 10, 10, tag="car")]}, image_size=(64, 64)
        )
        result = export_yolo(store, project, CATS, tmp_path)
        assert len(result.files) == 3
        assert result.files[0].name == "frame_0000.txt"

    def test_values_in_unit_range_and_invertible(self, tmp_path):
        rng = np.random.default_rng(111)
        project = make_project(n_frames=1)
        width, height = 320, 200
        for _ in range(50):
            x1 = int(rng.integers(-30, width - 1))
            y1 = int(rng.integers(-30, height - 1))
            x2 = int(rng.integers(x1 + 1, width + 30))
            y2 = int(rng.integers(y1 + 1, height + 30))
            box = BoundingBox(x1, y1, x2, y2)
            if box.clip(width, height) is None:
                continue
            store = make_store(
                project, {0: [box_obj(1, x1, y1, x2, y2, tag="car")]}, image_size=(width, height)
            )
            result = export_yolo(store, project, CATS, tmp_path)
            line = result.files[0].read_text(encoding="utf-8").strip()
            _, cx, cy, w, h = line.split(" ")
            values = [float(v) for v in (cx, cy, w, h)]
            assert all(0.0 <= v <= 1.0 for v in values)
            clipped = box.clip(width, height)
            assert abs(values[0] * width - (clipped.ul_x + clipped.lr_x) / 2) <= 0.5
            assert abs(values[2] * width - clipped.width) <= 0.5

    def test_mask_geometry_via_bbox(self, tmp_path):
        project = make_project(GeometryKind.PIXEL, n_frames=1)
        store = make_store(
            project,
            {0: [mask_obj(11, square_mask(64, 64, 8, 8, 16), tag="car")]},
            image_size=(64, 64),
        )
        result = export_yolo(store, project, CATS, tmp_path)
        line = result.files[0].read_text(encoding="utf-8").strip()
        assert line.split(" ")[0] == "1"
        assert float(line.split(" ")[3]) == 16 / 64

    def test_empty_category_list(self, tmp_path):
        project = make_project(n_frames=1)
        store = make_store(project, {}, image_size=(64, 64))
        with pytest.raises(EmptyCategoryList):
            export_yolo(store, project, CategoryList("empty", ()), tmp_path)


class TestRle:
    def test_all_zero_single_run(self):
        assert rle_encode(np.zeros((3, 4), dtype=bool)) == [12]

    def test_all_one_leading_zero_run(self):
        assert rle_encode(np.ones((3, 4), dtype=bool)) == [0, 12]

    def test_column_major_order(self):
        bits = np.zeros((2, 3), dtype=bool)
        bits[0, 0] = True  # first pixel in column-major order
        assert rle_encode(bits) == [0, 1, 5]
        bits = np.zeros((2, 3), dtype=bool)
        bits[0, 1] = True  # third pixel column-major
        assert rle_encode(bits) == [2, 1, 3]

    def test_round_trip_against_independent_decoder(self):
        rng = np.random.default_rng(113)
        for _ in range(100):
            h, w = int(rng.integers(1, 20)), int(rng.integers(1, 20))
            bits = rng.random((h, w)) < rng.uniform(0.1, 0.9)
            counts = rle_encode(bits)
            assert sum(counts) == h * w
            assert np.array_equal(rle_decode(counts, h, w), bits)


class TestTraceBoundaries:
    def rasterize_loops(self, loops, width, height):
        from annotweave.masks import rasterize_polygon
        import warnings

        out = np.zeros((height, width), dtype=bool)
        for loop in loops:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out ^= rasterize_polygon(Polygon(tuple(loop)), width, height)
        return out

    def test_single_pixel_square_loop(self):
        bits = np.zeros((4, 4), dtype=bool)
        bits[1, 2] = True
        loops = trace_boundaries(bits)
        assert loops == [[(2, 1), (3, 1), (3, 2), (2, 2)]]

    def test_rectangle_merges_collinear(self):
        bits = np.zeros((6, 8), dtype=bool)
        bits[1:4, 2:7] = True
        loops = trace_boundaries(bits)
        assert len(loops) == 1
        assert sorted(loops[0]) == [(2, 1), (2, 4), (7, 1), (7, 4)]

    def test_reconstruction_exact_on_random_masks(self):
        rng = np.random.default_rng(127)
        for _ in range(50):
            bits = rng.random((12, 14)) < rng.uniform(0.2, 0.7)
            loops = trace_boundaries(bits)
            assert np.array_equal(self.rasterize_loops(loops, 14, 12), bits)

    def test_hole_produces_inner_loop(self):
        bits = np.zeros((7, 7), dtype=bool)
        bits[1:6, 1:6] = True
        bits[3, 3] = False
        loops = trace_boundaries(bits)
        assert len(loops) == 2
        assert np.array_equal(self.rasterize_loops(loops, 7, 7), bits)


class TestCoco:
    def pixel_store(self, bits_list, tags=None):
        project = make_project(GeometryKind.PIXEL, n_frames=len(bits_list))
        frames = {}
        for idx, bits in enumerate(bits_list):
            tag = (tags or {}).get(idx, "car")
            frames[idx] = [mask_obj(11 + idx, bits, tag=tag)]
        height, width = bits_list[0].shape
        return project, make_store(project, frames, image_size=(width, height))

    def test_structure_and_first_appearance_categories(self):
        project = make_project(n_frames=2)
        store = make_store(
            project,
            {
                0: [box_obj(1, 0, 0, 8, 8, tag="zebra"), box_obj(2, 1, 1, 9, 9, tag="ant")],
                1: [box_obj(1, 0, 0, 8, 8, tag="zebra")],
            },
            image_size=(32, 32),
        )
        doc = export_coco(store, project).document
        assert [img["id"] for img in doc["images"]] == [1, 2]
        assert doc["images"][0]["width"] == 32
        assert {c["name"]: c["id"] for c in doc["categories"]} == {"zebra": 1, "ant": 2}
        assert [a["id"] for a in doc["annotations"]] == [1, 2, 3]
        assert doc["annotations"][0]["image_id"] == 1

    def test_supplied_category_list_order(self):
        project = make_project(n_frames=1)
        store = make_store(
            project, {0: [box_obj(1, 0, 0, 8, 8, tag="bus")]}, image_size=(32, 32)
        )
        doc = export_coco(store, project, categories=CATS).document
        assert doc["annotations"][0]["category_id"] == 3  # list position + 1

    def test_rle_mode_validity(self):
        rng = np.random.default_rng(131)
        for _ in range(30):
            bits = rng.random((15, 11)) < 0.4
            if not bits.any():
                continue
            project, store = self.pixel_store([bits])
            doc = export_coco(store, project, mask_mode=MaskMode.RLE).document
            ann = doc["annotations"][0]
            assert ann["iscrowd"] == 1
            counts = ann["segmentation"]["counts"]
            assert ann["segmentation"]["size"] == [15, 11]
            assert sum(counts) == 15 * 11
            decoded = rle_decode(counts, 15, 11)
            assert np.array_equal(decoded, bits)
            assert ann["area"] == int(bits.sum())
            ys, xs = np.nonzero(bits)
            assert ann["bbox"] == [
                int(xs.min()),
                int(ys.min()),
                int(xs.max()) - int(xs.min()) + 1,
                int(ys.max()) - int(ys.min()) + 1,
            ]

    def test_polygon_mode_validity(self):
        rng = np.random.default_rng(137)
        for _ in range(20):
            bits = rng.random((10, 12)) < 0.45
            if not bits.any():
                continue
            project, store = self.pixel_store([bits])
            doc = export_coco(store, project, mask_mode=MaskMode.POLYGON).document
            ann = doc["annotations"][0]
            assert ann["iscrowd"] == 0
            assert ann["area"] == int(bits.sum())
            xs, ys = [], []
            for loop in ann["segmentation"]:
                xs += loop[0::2]
                ys += loop[1::2]
            bys, bxs = np.nonzero(bits)
            assert min(xs) == bxs.min() and max(xs) == bxs.max() + 1
            assert min(ys) == bys.min() and max(ys) == bys.max() + 1
            assert ann["bbox"][2] == max(xs) - min(xs)

    def test_dontcare_band_excluded(self):
        from annotweave.masks import add_dontcare_border

        bits = square_mask(16, 16, 4, 4, 4)
        banded = add_dontcare_border(PixelMask(bits), 2)
        project = make_project(GeometryKind.PIXEL, n_frames=1)
        store = make_store(
            project,
            {0: [mask_obj(11, banded.object_bits, banded.dontcare_bits)]},
            image_size=(16, 16),
        )
        doc = export_coco(store, project, mask_mode=MaskMode.RLE).document
        ann = doc["annotations"][0]
        assert ann["area"] == 16
        assert np.array_equal(rle_decode(ann["segmentation"]["counts"], 16, 16), bits)

    def test_polygon_geometry_shoelace_area(self):
        project = make_project(GeometryKind.PIXEL, n_frames=1)
        triangle = ((0.0, 0.0), (4.0, 0.0), (0.0, 3.0))
        store = make_store(project, {0: [poly_obj(11, triangle)]}, image_size=(16, 16))
        doc = export_coco(store, project, mask_mode=MaskMode.POLYGON).document
        ann = doc["annotations"][0]
        assert ann["area"] == pytest.approx(6.0)
        assert ann["bbox"] == [0.0, 0.0, 4.0, 3.0]
        assert polygon_area(triangle) == pytest.approx(6.0)

    def test_export_is_read_only(self, tmp_path):
        project = make_project(n_frames=1)
        store = make_store(
            project, {0: [box_obj(1, 0, 0, 8, 8, tag="car")]}, image_size=(32, 32)
        )
        snapshot = make_store(
            project, {0: [box_obj(1, 0, 0, 8, 8, tag="car")]}, image_size=(32, 32)
        )
        export_coco(store, project, out_path=tmp_path / "out.json")
        export_yolo(store, project, CATS, tmp_path / "yolo")
        assert store == snapshot

    def test_written_file_is_valid_json(self, tmp_path):
        import json

        project = make_project(n_frames=1)
        store = make_store(
            project, {0: [box_obj(1, 0, 0, 8, 8, tag="car")]}, image_size=(32, 32)
        )
        result = export_coco(store, project, out_path=tmp_path / "coco.json")
        loaded = json.loads(result.path.read_text(encoding="utf-8"))
        assert loaded == result.document


class TestConvert:
    def test_square_mask_becomes_box(self):
        project = make_project(GeometryKind.PIXEL, n_frames=1)
        store = make_store(
            project,
            {0: [mask_obj(11, square_mask(64, 64, 20, 20, 20), tag="dog")]},
            image_size=(64, 64),
        )
        result = convert_pixel_to_box(store, project)
        obj = result.store.frame(0).get(11)
        assert obj.geometry == BoundingBox(20, 20, 40, 40)
        assert obj.tag == "dog"
        assert result.project.geometry_kind is GeometryKind.BOX
        assert result.dropped == []

    def test_empty_store(self):
        project = make_project(GeometryKind.PIXEL, n_frames=2)
        store = make_store(project, {}, image_size=(16, 16))
        result = convert_pixel_to_box(store, project)
        assert result.store.frames == {}

    def test_empty_mask_dropped_in_that_frame_only(self):
        project = make_project(GeometryKind.PIXEL, n_frames=2)
        store = make_store(
            project,
            {
                0: [mask_obj(11, np.zeros((16, 16), dtype=bool))],
                1: [mask_obj(11, square_mask(16, 16, 2, 2, 3))],
            },
            image_size=(16, 16),
        )
        result = convert_pixel_to_box(store, project)
        assert result.dropped == [(0, 11)]
        assert 0 not in result.store.frames
        assert result.store.frame(1).get(11) is not None


class TestCategoryLists:
    def test_builtin_lists_have_public_counts(self):
        assert len(builtin_category_list("mscoco").entries) == 80
        assert len(builtin_category_list("pascal_voc").entries) == 20
        assert builtin_category_list("pascal_voc").entries[0] == "aeroplane"

    def test_directory_loading(self, tmp_path):
        (tmp_path / "animals.txt").write_text("cat\ndog\n", encoding="utf-8")
        (tmp_path / "things.txt").write_text("chair\n", encoding="utf-8")
        lists = load_category_lists(tmp_path)
        assert [c.name for c in lists] == ["animals", "things"]
        assert lists[0].id_of("dog") == 1

    def test_duplicate_line_reported(self, tmp_path):
        (tmp_path / "bad.txt").write_text("cat\ndog\ncat\n", encoding="utf-8")
        with pytest.raises(DuplicateName) as err:
            load_category_lists(tmp_path)
        assert "line 3" in str(err.value)

    def test_empty_file_skipped_with_warning(self, tmp_path):
        (tmp_path / "empty.txt").write_text("", encoding="utf-8")
        (tmp_path / "ok.txt").write_text("cat\n", encoding="utf-8")
        with pytest.warns(EmptyCategoryFileWarning):
            lists = load_category_lists(tmp_path)
        assert [c.name for c in lists] == ["ok"]

    def test_empty_directory(self, tmp_path):
        assert load_category_lists(tmp_path) == []
