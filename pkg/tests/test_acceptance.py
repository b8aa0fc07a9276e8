"""Acceptance suite: one test per release criterion, tolerances pinned.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion. Every expected value is either hand-computed, produced by the
independent brute-force oracles in oracles.py, or a frozen golden string.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
import pytest

from annotweave.exporters import (
    CategoryList,
    MaskMode,
    export_coco,
    export_yolo,
    rle_encode,
    trace_boundaries,
)
from annotweave.masks import (
    BrushKind,
    decode_id_image,
    encode_id_image,
    fill_holes,
    grabcut_init,
    grabcut_refine,
    remove_noise,
)
from annotweave.model import (
    DONTCARE_VALUE,
    LEGAL_PIXEL_IDS,
    AnnotatedObject,
    BoundingBox,
    GeometryKind,
    PixelMask,
    Polygon,
)
from annotweave.registration import (
    Direction,
    Homography,
    load_homographies,
    map_box,
    map_mask,
    map_point,
    save_homographies,
)
from annotweave.sequence import delete_forward, interpolate, merge_forward, merge_geometries
from annotweave.storage import backup_annotations, load_project, save_project
from annotweave.storage import _box_csv  # canonical serialization for byte comparison

from .conftest import box_obj, make_project, make_store, square_mask
from .generators import random_box_project, random_pixel_project
from .oracles import (
    mask_iou,
    plain_frames,
    replay_delete_forward,
    replay_merge_forward,
    rle_decode,
)
from .scenes import SCENE_KINDS, correction_brushes, make_scene
from .test_idcodec import random_disjoint_masks


def ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def test_id_codec_bijection():
    """1,000 random disjoint mask sets: encode-decode-encode byte identity,
    emitted values confined to {0, legal IDs, 170}, under 30 s."""
    rng = np.random.default_rng(808)
    legal = {0, DONTCARE_VALUE} | set(LEGAL_PIXEL_IDS)
    started = time.perf_counter()
    for trial in range(1000):
        width = int(rng.integers(8, 24))
        height = int(rng.integers(8, 24))
        objects = random_disjoint_masks(rng, width, height)
        if objects and rng.random() < 0.4:
            from annotweave.masks import add_dontcare_border

            object_id, mask = objects[0]
            grown = add_dontcare_border(mask, 1)
            band = grown.dontcare_bits.copy()
            for _, other in objects[1:]:
                band &= ~other.object_bits
            objects[0] = (object_id, PixelMask(mask.object_bits, band))
        raster = encode_id_image(objects, width, height)
        assert set(int(v) for v in np.unique(raster)) <= legal, trial
        decoded = decode_id_image(raster)
        again = encode_id_image(decoded.objects, width, height, decoded.shared_dontcare)
        assert raster.tobytes() == again.tobytes(), trial
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"codec suite took {elapsed:.1f}s"
    ok(f"ID-codec bijection over 1000 mask sets in {elapsed:.1f}s")


def test_grabcut_synthetic_suite():
    """50 two-color scenes: init IoU >= 0.95 on >= 45, refined IoU >= 0.99
    on all 50, hard brush constraints hold on 100%, under 2 minutes."""
    rng = np.random.default_rng(20260809)
    started = time.perf_counter()
    init_hits = 0
    refine_hits = 0
    constraint_hits = 0
    for i in range(50):
        image, gt, rect = make_scene(rng, SCENE_KINDS[i % 3])
        init = grabcut_init(image, rect, iterations=5)
        if mask_iou(init.mask, gt) >= 0.95:
            init_hits += 1
        brushes = correction_brushes(init.mask, gt)
        refined = grabcut_refine(init.state, brushes, iterations=5) if brushes else init
        if mask_iou(refined.mask, gt) >= 0.99:
            refine_hits += 1
        holds = True
        for brush in brushes:
            footprint = brush.footprint(*reversed(gt.shape))
            if brush.kind is BrushKind.TRUE_POSITIVE:
                holds &= bool((refined.mask & footprint).sum() == footprint.sum())
            else:
                holds &= not (refined.mask & footprint).any()
        if holds:
            constraint_hits += 1
    elapsed = time.perf_counter() - started
    assert init_hits >= 45, f"init IoU >= 0.95 on only {init_hits}/50 scenes"
    assert refine_hits == 50, f"refined IoU >= 0.99 on only {refine_hits}/50 scenes"
    assert constraint_hits == 50, f"hard constraints held on only {constraint_hits}/50"
    assert elapsed < 120.0, f"GrabCut suite took {elapsed:.1f}s"
    ok(
        f"GrabCut suite: init {init_hits}/50, refined {refine_hits}/50, "
        f"constraints 50/50 in {elapsed:.1f}s"
    )


def test_grabcut_energy_monotonic():
    """With mixtures frozen inside an iteration, the min-cut never raises
    the total energy (1e-6 float slack)."""
    rng = np.random.default_rng(424242)
    cuts = 0
    for i in range(12):
        image, gt, rect = make_scene(rng, SCENE_KINDS[i % 3])
        result = grabcut_init(image, rect, iterations=5)
        for before, after in result.energy_trace:
            assert after <= before + 1e-6, (i, before, after)
            cuts += 1
        brushes = correction_brushes(result.mask, gt)
        if brushes:
            refined = grabcut_refine(result.state, brushes, iterations=3)
            for before, after in refined.energy_trace:
                assert after <= before + 1e-6, (i, before, after)
                cuts += 1
    ok(f"energy non-increasing across {cuts} min-cut iterations")


def test_interpolation_oracle():
    """Keyframes at 1 and 6 create frames 2-5; 200 random keyframe pairs
    match the closed-form rounded blend exactly."""
    project = make_project(n_frames=40)
    store = make_store(
        project, {1: [box_obj(9, 10, 10, 20, 20)], 6: [box_obj(9, 30, 30, 40, 40)]}
    )
    out = interpolate(store, 9, 1, 6)
    assert [n for n in range(40) if out.frame(n).get(9)] == [1, 2, 3, 4, 5, 6]

    rng = np.random.default_rng(31337)
    for _ in range(200):
        start = int(rng.integers(0, 20))
        end = start + int(rng.integers(2, 19))
        a = [int(v) for v in rng.integers(0, 200, 2)]
        b = [int(v) for v in rng.integers(0, 200, 2)]
        box_a = BoundingBox(a[0], a[1], a[0] + int(rng.integers(1, 60)), a[1] + int(rng.integers(1, 60)))
        box_b = BoundingBox(b[0], b[1], b[0] + int(rng.integers(1, 60)), b[1] + int(rng.integers(1, 60)))
        store = make_store(
            project,
            {start: [box_obj(7, *box_a.as_tuple())], end: [box_obj(7, *box_b.as_tuple())]},
        )
        result = interpolate(store, 7, start, end)
        for n in range(start + 1, end):
            t = (n - start) / (end - start)
            expected = tuple(
                int(np.floor(p + t * (q - p) + 0.5))
                for p, q in zip(box_a.as_tuple(), box_b.as_tuple())
            )
            assert result.frame(n).get(7).geometry.as_tuple() == expected
        assert result.frame(start).get(7).geometry == box_a
        assert result.frame(end).get(7).geometry == box_b
    ok("interpolation matches the closed-form blend on 200 random pairs")


def test_delete_merge_forward_replay():
    """100 random edit scripts equal the brute-force frame-by-frame
    replay; frames before from_idx stay byte-identical."""
    rng = np.random.default_rng(515151)
    project = make_project(n_frames=14)

    def random_store():
        frames = {}
        for idx in range(14):
            objs = []
            for object_id in range(5):
                if rng.random() < 0.45:
                    x, y = (int(v) for v in rng.integers(0, 30, 2))
                    objs.append(box_obj(object_id, x, y, x + int(rng.integers(1, 12)), y + int(rng.integers(1, 12))))
            if objs:
                frames[idx] = objs
        return make_store(project, frames)

    def earlier_bytes(store, from_idx):
        trimmed = replace(
            store, frames={i: f for i, f in store.frames.items() if i < from_idx}
        )
        return _box_csv(project, trimmed).encode("utf-8")

    for script in range(100):
        store = random_store()
        if rng.random() < 0.5:
            ids = set(int(v) for v in rng.choice(5, size=int(rng.integers(1, 3)), replace=False))
            from_idx = int(rng.integers(0, 14))
            before = earlier_bytes(store, from_idx)
            got_store, got_report = delete_forward(store, ids, from_idx)
            ref_frames, ref_report = replay_delete_forward(
                plain_frames(store), ids, from_idx, 14
            )
            assert got_report == ref_report, script
            assert plain_frames(got_store) == ref_frames, script
            assert earlier_bytes(got_store, from_idx) == before, script
        else:
            keep, absorb = (int(v) for v in rng.choice(5, size=2, replace=False))
            from_idx = int(rng.integers(0, 14))
            before = earlier_bytes(store, from_idx)
            got_store, got_changes = merge_forward(store, keep, absorb, from_idx)
            ref_frames, ref_changes = replay_merge_forward(
                plain_frames(store),
                keep,
                absorb,
                from_idx,
                14,
                lambda kept, absorbed: merge_geometries(kept.geometry, absorbed.geometry, None),
            )
            assert [(c.frame_index, c.action) for c in got_changes] == ref_changes, script
            assert plain_frames(got_store) == ref_frames, script
            assert earlier_bytes(got_store, from_idx) == before, script
    ok("delete/merge-forward replay matches the reference on 100 scripts")


def test_persistence_round_trip(tmp_path):
    """200 random projects: save-load deep equality, save-load-save byte
    identity, and exactly one timestamped backup file per open."""
    rng = np.random.default_rng(616161)
    for trial in range(200):
        root = tmp_path / f"proj_{trial:03d}"
        if trial % 2 == 0:
            project, store = random_box_project(rng, root, n_frames=int(rng.integers(2, 7)))
        else:
            project, store = random_pixel_project(rng, root, n_frames=int(rng.integers(2, 6)))
        save_project(project, store)
        first = (root / "annotations.csv").read_bytes()
        loaded = load_project(root)
        assert loaded.store == store, trial
        assert loaded.project.meta_schema == project.meta_schema, trial
        assert loaded.project.geometry_kind is project.geometry_kind, trial
        save_project(loaded.project, loaded.store)
        assert (root / "annotations.csv").read_bytes() == first, trial

    root = tmp_path / "proj_000"
    backup_dir = root / "backup"
    for opens in range(1, 4):
        backup_annotations(root)  # what every project open performs
        assert len(list(backup_dir.iterdir())) == opens
    ok("200 random projects round-trip; backups append one file per open")


def test_yolo_golden_files(tmp_path):
    """Fixture export byte-equal to hand-computed golden labels."""
    project = make_project(n_frames=3)
    categories = CategoryList("golden", ("person", "car"))
    store = make_store(
        project,
        {
            0: [
                box_obj(0, 0, 0, 640, 480, tag="person"),
                box_obj(1, 32, 24, 352, 264, tag="car"),
            ],
            2: [box_obj(2, 160, 120, 480, 360, tag="person")],
        },
        image_size=(640, 480),
    )
    result = export_yolo(store, project, categories, tmp_path)
    golden = {
        "frame_0000.txt": (
            "0 0.500000 0.500000 1.000000 1.000000\n"
            "1 0.300000 0.300000 0.500000 0.500000\n"
        ),
        "frame_0001.txt": "",
        "frame_0002.txt": "0 0.500000 0.500000 0.500000 0.500000\n",
    }
    assert [p.name for p in result.files] == sorted(golden)
    for path in result.files:
        assert path.read_bytes() == golden[path.name].encode("utf-8"), path.name
        for line in path.read_text(encoding="utf-8").splitlines():
            values = [float(v) for v in line.split(" ")[1:]]
            assert all(0.0 <= v <= 1.0 for v in values)
    assert result.skipped == []
    ok("YOLO export byte-equal to golden labels")


def test_coco_validity_against_independent_decoder():
    """100 random masks in both modes: counts sum to w*h, area equals the
    popcount, bbox equals the tight bbox (checked via the first-written
    independent RLE decoder and loop-extent scan)."""
    rng = np.random.default_rng(717171)
    project = make_project(GeometryKind.PIXEL, n_frames=1)
    from .conftest import mask_obj

    for trial in range(100):
        height = int(rng.integers(5, 25))
        width = int(rng.integers(5, 25))
        bits = rng.random((height, width)) < rng.uniform(0.15, 0.75)
        if not bits.any():
            continue
        store = make_store(
            project, {0: [mask_obj(11, bits)]}, image_size=(width, height)
        )
        ys, xs = np.nonzero(bits)
        tight = [int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)]

        rle_doc = export_coco(store, project, mask_mode=MaskMode.RLE).document
        ann = rle_doc["annotations"][0]
        counts = ann["segmentation"]["counts"]
        assert sum(counts) == width * height, trial
        assert np.array_equal(rle_decode(counts, height, width), bits), trial
        assert ann["area"] == int(bits.sum()), trial
        assert ann["bbox"] == tight, trial
        assert ann["iscrowd"] == 1

        poly_doc = export_coco(store, project, mask_mode=MaskMode.POLYGON).document
        ann = poly_doc["annotations"][0]
        assert ann["area"] == int(bits.sum()), trial
        assert ann["bbox"] == tight, trial
        assert ann["iscrowd"] == 0
        xs_all, ys_all = [], []
        for loop in ann["segmentation"]:
            xs_all += loop[0::2]
            ys_all += loop[1::2]
        assert [min(xs_all), min(ys_all)] == tight[:2], trial
        assert [max(xs_all) - min(xs_all), max(ys_all) - min(ys_all)] == tight[2:], trial
    ok("COCO export valid for 100 random masks in RLE and polygon modes")


def test_registration_criteria(tmp_path):
    """Identity is a fixed point for points, boxes, masks; stored inverse
    pairs compose to identity within 0.5 px over a 640x480 grid; the
    sample-format file parses with both keys."""
    identity = Homography.identity()
    assert map_point(identity, (123.25, 45.5)) == (123.25, 45.5)
    box = BoundingBox(12, 34, 56, 78)
    assert map_box(identity, box, (640, 480)) == box
    mask = PixelMask(square_mask(64, 48, 10, 12, 9))
    assert map_mask(identity, mask, (64, 48)) == mask

    m = np.array([[1.02, 0.015, -3.0], [-0.01, 0.985, 2.0], [2e-5, -1e-5, 1.0]])
    forward = Homography(m, Direction.RGB_TO_THERMAL)
    backward = forward.inverse()
    path = tmp_path / "homographies.yml"
    save_homographies(path, forward, backward)
    header = path.read_text(encoding="utf-8").splitlines()
    assert header[0] == "%YAML:1.0"
    assert any("homRgbToT" in ln for ln in header)
    assert any("homTToRgb" in ln for ln in header)
    loaded_fwd, loaded_bwd = load_homographies(path)

    worst = 0.0
    for x in np.linspace(0, 639, 33):
        for y in np.linspace(0, 479, 25):
            px, py = map_point(loaded_bwd, map_point(loaded_fwd, (x, y)))
            worst = max(worst, abs(px - x), abs(py - y))
    assert worst <= 0.5, f"round-trip drift {worst:.4f}px"
    ok(f"registration fixed points and {worst:.2e}px round-trip drift")


def test_filter_idempotence_and_monotonicity():
    """remove_noise and fill_holes idempotent over 500 random masks;
    remove_noise never adds bits, fill_holes never removes them."""
    rng = np.random.default_rng(909090)
    for trial in range(500):
        height = int(rng.integers(4, 28))
        width = int(rng.integers(4, 28))
        mask = PixelMask(rng.random((height, width)) < rng.uniform(0.15, 0.75))
        min_area = int(rng.integers(1, 10))

        cleaned = remove_noise(mask, min_area)
        assert remove_noise(cleaned, min_area) == cleaned, trial
        assert cleaned.pixel_count() <= mask.pixel_count(), trial
        assert not (cleaned.object_bits & ~mask.object_bits).any(), trial

        filled = fill_holes(mask)
        assert fill_holes(filled) == filled, trial
        assert filled.pixel_count() >= mask.pixel_count(), trial
        assert not (mask.object_bits & ~filled.object_bits).any(), trial
    ok("filters idempotent and monotone over 500 random masks")
