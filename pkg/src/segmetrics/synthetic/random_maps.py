"""Seeded random segmentation scenarios.

Maps are built from uniformly sampled rectangles with rejection sampling
for disjointness (one pixel of separation, so connected-component labeling
sees exactly the painted rectangles). Prediction maps come either from an
independent sample or from editing the ground truth: per-class shifts,
dropped regions, and extra rectangles. Every byte of output is a pure
function of the seed.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..maps import DEFAULT_IGNORE_ID, LabelMap
from ..regions import OverlapGraph


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _place_rects(rng, grid, occupied, count, fg_classes, max_side):
    h, w = grid.shape
    for _ in range(count):
        for _attempt in range(30):
            rh = int(rng.integers(2, max_side + 1))
            rw = int(rng.integers(2, max_side + 1))
            if rh > h or rw > w:
                continue
            r = int(rng.integers(0, h - rh + 1))
            c = int(rng.integers(0, w - rw + 1))
            # Expanded box keeps 1px separation from anything placed before.
            if occupied[max(r - 1, 0) : r + rh + 1, max(c - 1, 0) : c + rw + 1].any():
                continue
            k = int(rng.choice(fg_classes))
            grid[r : r + rh, c : c + rw] = k
            occupied[r : r + rh, c : c + rw] = True
            break


def random_label_map(
    seed,
    height=48,
    width=48,
    num_classes=4,
    *,
    background_id=0,
    ignore_id=DEFAULT_IGNORE_ID,
    max_regions=8,
    max_side=12,
    ignore_speckles=0,
):
    """One random label map; see the module docstring for the recipe."""
    rng = _rng(seed)
    grid = np.full((height, width), background_id, dtype=np.int32)
    occupied = np.zeros((height, width), dtype=bool)
    fg = [k for k in range(num_classes) if k != background_id]
    count = int(rng.integers(0, max_regions + 1))
    _place_rects(rng, grid, occupied, count, fg, max_side)
    if ignore_speckles and ignore_id is not None:
        n = int(rng.integers(0, ignore_speckles + 1))
        rows = rng.integers(0, height, n)
        cols = rng.integers(0, width, n)
        grid[rows, cols] = ignore_id
    return LabelMap(grid, num_classes, ignore_id)


def random_map_pair(
    seed,
    height=48,
    width=48,
    num_classes=4,
    *,
    background_id=0,
    ignore_id=DEFAULT_IGNORE_ID,
    max_regions=8,
):
    """A (gt, pred) pair sharing one seed.

    Half the seeds derive the prediction from the ground truth (shifted
    classes, dropped regions, extra rectangles) so the overlap graphs are
    rich; the other half use an independent sample so disagreement paths
    get exercised too. Ground truth occasionally carries ignore speckles.
    """
    rng = _rng(seed)
    gt = random_label_map(
        rng,
        height,
        width,
        num_classes,
        background_id=background_id,
        ignore_id=ignore_id,
        max_regions=max_regions,
        ignore_speckles=12 if rng.random() < 0.3 else 0,
    )
    if rng.random() < 0.5:
        pred = random_label_map(
            rng,
            height,
            width,
            num_classes,
            background_id=background_id,
            ignore_id=ignore_id,
            max_regions=max_regions,
        )
        return gt, pred

    grid = gt.data.copy()
    if ignore_id is not None:
        grid[grid == ignore_id] = background_id
    out = np.full_like(grid, background_id)
    for k in range(num_classes):
        if k == background_id:
            continue
        mask = grid == k
        if not mask.any():
            continue
        if rng.random() < 0.25:
            continue  # drop the whole class
        dr = int(rng.integers(-3, 4))
        dc = int(rng.integers(-3, 4))
        shifted = np.zeros_like(mask)
        src = mask[
            max(-dr, 0) : mask.shape[0] - max(dr, 0),
            max(-dc, 0) : mask.shape[1] - max(dc, 0),
        ]
        shifted[
            max(dr, 0) : mask.shape[0] - max(-dr, 0),
            max(dc, 0) : mask.shape[1] - max(-dc, 0),
        ] = src
        if rng.random() < 0.3:
            # Drop one connected piece to create misses.
            labeled, count = ndimage.label(shifted)
            if count:
                drop = int(rng.integers(1, count + 1))
                shifted[labeled == drop] = False
        if rng.random() < 0.4 and shifted.any():
            # Carve gap lines so several pieces cover one gt region.
            rows = np.flatnonzero(shifted.any(axis=1))
            cols = np.flatnonzero(shifted.any(axis=0))
            for _ in range(int(rng.integers(1, 3))):
                if rng.random() < 0.5 and len(rows) > 2:
                    shifted[int(rng.choice(rows[1:-1])), :] = False
                elif len(cols) > 2:
                    shifted[:, int(rng.choice(cols[1:-1]))] = False
        out[shifted] = k
    fg = [k for k in range(num_classes) if k != background_id]
    for k in fg:
        if rng.random() >= 0.35:
            continue
        # Bridge two predicted regions of the class through background so
        # one prediction spans several ground-truth regions.
        labeled, count = ndimage.label(out == k, structure=np.ones((3, 3), bool))
        if count < 2:
            continue
        a = np.argwhere(labeled == 1)[0]
        b = np.argwhere(labeled == 2)[0]
        leg = out[min(a[0], b[0]) : max(a[0], b[0]) + 1, a[1]]
        leg[leg == background_id] = k
        leg = out[b[0], min(a[1], b[1]) : max(a[1], b[1]) + 1]
        leg[leg == background_id] = k
    occupied = out != background_id
    _place_rects(rng, out, occupied, int(rng.integers(0, 4)), fg, 10)
    return gt, LabelMap(out, num_classes, ignore_id)


def random_overlap_graph(seed):
    """A random bipartite overlap structure, not tied to any map.

    Region areas are padded well above the summed edge weights so the
    result always passes the graph's own consistency checks.
    """
    rng = _rng(seed)
    n = int(rng.integers(0, 7))
    m = int(rng.integers(0, 7))
    edges = []
    for g in range(n):
        for s in range(m):
            if rng.random() < 0.35:
                edges.append((g, s, int(rng.integers(1, 4))))
    gt_areas = rng.integers(21, 80, n)
    pred_areas = rng.integers(21, 80, m)
    return OverlapGraph(1, gt_areas, pred_areas, edges)
