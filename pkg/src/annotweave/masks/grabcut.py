"""Iterative foreground extraction seeded by a rectangle.

Alternates three steps: assign pixels to mixture components, refit the
foreground/background color mixtures, then relabel by solving an exact
min-cut over the 8-connected pixel grid. The data term is the negative
log mixture likelihood; the smoothness term is contrast-weighted so cuts
prefer color edges. User brushes pin pixels to sure labels that the cut
can never override.

Refinement runs on a crop padded 20 px around the seeded region rather
than the full frame; everything outside is certain background anyway.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import ConflictingBrushWarning, DegenerateRect
from ..model import BoundingBox
from .gmm import COMPONENTS, GaussianMixture, fit_gmm, refit_gmm
from .maxflow import max_flow_min_cut
from .ops import Brush, BrushKind

SURE_BG = np.uint8(0)
SURE_FG = np.uint8(1)
PROB_BG = np.uint8(2)
PROB_FG = np.uint8(3)

GAMMA = 50.0  # smoothness weight
HARD_LINK = 9.0 * GAMMA  # exceeds any sum of neighbor links, pins sure pixels
WINDOW_PAD = 20
DEFAULT_ITERATIONS = 5

RectLike = Union[BoundingBox, tuple]


@dataclass(frozen=True)
class GrabCutState:
    """Opaque segmentation session value; owned by one session at a time."""

    image: np.ndarray  # (H, W, 3) uint8
    trimap: np.ndarray  # (H, W) uint8 of SURE_/PROB_ labels
    fg_model: Optional[GaussianMixture] = None
    bg_model: Optional[GaussianMixture] = None


@dataclass(frozen=True)
class GrabCutResult:
    mask: np.ndarray  # (H, W) bool foreground
    state: GrabCutState
    collapsed: bool  # True when refinement left zero foreground pixels
    energy_trace: tuple = ()  # per min-cut (energy before, energy after)
    brush_conflicts: int = 0


def _as_rect(rect: RectLike, width: int, height: int) -> tuple[int, int, int, int]:
    if isinstance(rect, BoundingBox):
        coords = rect.as_tuple()
    else:
        coords = tuple(int(v) for v in rect)
        if len(coords) != 4:
            raise DegenerateRect(f"rectangle needs 4 coordinates, got {coords}")
    x1, y1, x2, y2 = coords
    if x1 >= x2 or y1 >= y2:
        raise DegenerateRect(f"rectangle {coords} has no area")
    if x1 < 0 or y1 < 0 or x2 > width or y2 > height:
        raise DegenerateRect(f"rectangle {coords} exceeds the {width}x{height} image")
    if (x2 - x1) * (y2 - y1) < 4:
        raise DegenerateRect(f"rectangle {coords} is smaller than 4 pixels")
    if x1 == 0 and y1 == 0 and x2 == width and y2 == height:
        raise DegenerateRect("rectangle covers the whole image, no background left")
    return x1, y1, x2, y2


def grabcut_init(
    image: np.ndarray, rect: RectLike, iterations: int = DEFAULT_ITERATIONS
) -> GrabCutResult:
    """Seed a segmentation: outside the rectangle is sure background,
    inside starts as probable foreground, then `iterations` refinement
    rounds run."""
    img = _as_rgb(image)
    h, w = img.shape[:2]
    x1, y1, x2, y2 = _as_rect(rect, w, h)
    trimap = np.full((h, w), SURE_BG, dtype=np.uint8)
    trimap[y1:y2, x1:x2] = PROB_FG
    state = GrabCutState(image=img, trimap=trimap)
    return _refine_loop(state, iterations)


def grabcut_refine(
    state: GrabCutState,
    brushes: Sequence[Brush] = (),
    iterations: int = DEFAULT_ITERATIONS,
) -> GrabCutResult:
    """Pin brushed pixels to sure labels and rerun refinement.

    True-positive pixels are guaranteed present in the output mask and
    true-negative pixels absent. When one pixel gets both kinds in the
    same call the last stroke wins and a ConflictingBrushWarning reports
    the overlap size.
    """
    h, w = state.trimap.shape
    tp_seen = np.zeros((h, w), dtype=bool)
    tn_seen = np.zeros((h, w), dtype=bool)
    trimap = state.trimap.copy()
    for brush in brushes:
        if brush.kind not in (BrushKind.TRUE_POSITIVE, BrushKind.TRUE_NEGATIVE):
            raise ValueError(f"grabcut_refine expects constraint brushes, got {brush.kind}")
        fp = brush.footprint(w, h)
        if brush.kind is BrushKind.TRUE_POSITIVE:
            tp_seen |= fp
            trimap[fp] = SURE_FG
        else:
            tn_seen |= fp
            trimap[fp] = SURE_BG
    conflicts = int((tp_seen & tn_seen).sum())
    if conflicts:
        warnings.warn(
            f"{conflicts} pixel(s) received both positive and negative brushes; "
            "the later stroke wins",
            ConflictingBrushWarning,
            stacklevel=2,
        )
    state = replace(state, trimap=trimap)
    result = _refine_loop(state, iterations)
    return replace(result, brush_conflicts=conflicts)


def foreground_mask(trimap: np.ndarray) -> np.ndarray:
    return (trimap == SURE_FG) | (trimap == PROB_FG)


def _as_rgb(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB raster, got shape {img.shape}")
    return img.astype(np.uint8, copy=False)


def _window(trimap: np.ndarray) -> Optional[tuple[int, int, int, int]]:
    """Padded bounding window of everything that is not sure background."""
    ys, xs = np.nonzero(trimap != SURE_BG)
    if ys.size == 0:
        return None
    h, w = trimap.shape
    return (
        max(0, int(xs.min()) - WINDOW_PAD),
        max(0, int(ys.min()) - WINDOW_PAD),
        min(w, int(xs.max()) + 1 + WINDOW_PAD),
        min(h, int(ys.max()) + 1 + WINDOW_PAD),
    )


def _refine_loop(state: GrabCutState, iterations: int) -> GrabCutResult:
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    win = _window(state.trimap)
    if win is None:
        return GrabCutResult(
            mask=np.zeros(state.trimap.shape, dtype=bool), state=state, collapsed=True
        )
    x1, y1, x2, y2 = win
    trimap = state.trimap.copy()
    tri = trimap[y1:y2, x1:x2]
    pixels = state.image[y1:y2, x1:x2].astype(np.float64).reshape(-1, 3)
    grid = _GridTerms(state.image[y1:y2, x1:x2])

    fg_model, bg_model = state.fg_model, state.bg_model
    trace = []
    for _ in range(iterations):
        fg_sel = ((tri == SURE_FG) | (tri == PROB_FG)).ravel()
        fg_model, bg_model = _update_models(pixels, fg_sel, fg_model, bg_model)
        if fg_model is None or bg_model is None:
            break
        d_fg = -fg_model.log_likelihood(pixels)
        d_bg = -bg_model.log_likelihood(pixels)
        energy_before = grid.energy(fg_sel, d_fg, d_bg)
        fg_sel = grid.min_cut(tri.ravel(), d_fg, d_bg)
        trace.append((energy_before, grid.energy(fg_sel, d_fg, d_bg)))
        probable = ((tri == PROB_FG) | (tri == PROB_BG)).ravel()
        new_tri = tri.ravel().copy()
        new_tri[probable & fg_sel] = PROB_FG
        new_tri[probable & ~fg_sel] = PROB_BG
        tri[:] = new_tri.reshape(tri.shape)

    new_state = GrabCutState(
        image=state.image, trimap=trimap, fg_model=fg_model, bg_model=bg_model
    )
    mask = foreground_mask(trimap)
    return GrabCutResult(
        mask=mask,
        state=new_state,
        collapsed=not bool(mask.any()),
        energy_trace=tuple(trace),
    )


def _update_models(
    pixels: np.ndarray,
    fg_sel: np.ndarray,
    fg_model: Optional[GaussianMixture],
    bg_model: Optional[GaussianMixture],
) -> tuple[Optional[GaussianMixture], Optional[GaussianMixture]]:
    """Refit both mixtures from the current labeling; an empty side keeps
    its previous model so a temporarily one-sided labeling cannot crash
    the round."""
    fg_px = pixels[fg_sel]
    bg_px = pixels[~fg_sel]
    if fg_px.shape[0]:
        fg_model = refit_gmm(fg_model, fg_px) if fg_model else fit_gmm(fg_px, COMPONENTS)
    if bg_px.shape[0]:
        bg_model = refit_gmm(bg_model, bg_px) if bg_model else fit_gmm(bg_px, COMPONENTS)
    return fg_model, bg_model


class _GridTerms:
    """Contrast-weighted neighbor links for one image window.

    Four orientations cover the 8-neighborhood once: right, down,
    down-right, down-left. Diagonal links are scaled by 1/sqrt(2).
    The contrast scale beta is 1 / (2 * mean squared neighbor color
    distance), with beta = 0 on perfectly flat windows.
    """

    def __init__(self, window_rgb: np.ndarray):
        img = window_rgb.astype(np.float64)
        h, w = img.shape[:2]
        self.shape = (h, w)
        idx = np.arange(h * w, dtype=np.int64).reshape(h, w)

        pairs = [
            (idx[:, :-1], idx[:, 1:], _sq_diff(img[:, :-1], img[:, 1:]), 1.0),
            (idx[:-1, :], idx[1:, :], _sq_diff(img[:-1, :], img[1:, :]), 1.0),
            (idx[:-1, :-1], idx[1:, 1:], _sq_diff(img[:-1, :-1], img[1:, 1:]), np.sqrt(2.0)),
            (idx[:-1, 1:], idx[1:, :-1], _sq_diff(img[:-1, 1:], img[1:, :-1]), np.sqrt(2.0)),
        ]
        total_d2 = sum(float(p[2].sum()) for p in pairs)
        total_n = sum(p[2].size for p in pairs)
        mean_d2 = total_d2 / total_n if total_n else 0.0
        beta = 1.0 / (2.0 * mean_d2) if mean_d2 > 0 else 0.0

        self.edges_u = np.concatenate([p[0].ravel() for p in pairs])
        self.edges_v = np.concatenate([p[1].ravel() for p in pairs])
        self.weights = np.concatenate(
            [(GAMMA / p[3]) * np.exp(-beta * p[2].ravel()) for p in pairs]
        )

    def min_cut(self, tri_flat: np.ndarray, d_fg: np.ndarray, d_bg: np.ndarray) -> np.ndarray:
        """Optimal foreground selection for the given data terms; sure
        pixels are pinned via links no finite cut can pay."""
        n = tri_flat.size
        source, sink = n, n + 1
        src_cap = np.where(
            tri_flat == SURE_FG, HARD_LINK, np.where(tri_flat == SURE_BG, 0.0, d_bg)
        )
        sink_cap = np.where(
            tri_flat == SURE_BG, HARD_LINK, np.where(tri_flat == SURE_FG, 0.0, d_fg)
        )
        nodes = np.arange(n, dtype=np.int64)
        eu = np.concatenate([self.edges_u, np.full(n, source, dtype=np.int64), nodes])
        ev = np.concatenate([self.edges_v, nodes, np.full(n, sink, dtype=np.int64)])
        fwd = np.concatenate([self.weights, src_cap, sink_cap])
        rev = np.concatenate([self.weights, np.zeros(n), np.zeros(n)])
        _, side = max_flow_min_cut(n + 2, eu, ev, fwd, rev, source, sink)
        return side[:n]

    def energy(self, fg_sel: np.ndarray, d_fg: np.ndarray, d_bg: np.ndarray) -> float:
        data = float(np.where(fg_sel, d_fg, d_bg).sum())
        differs = fg_sel[self.edges_u] != fg_sel[self.edges_v]
        return data + float(self.weights[differs].sum())


def _sq_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    return (d * d).sum(axis=2)
