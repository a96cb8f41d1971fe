"""Structured perturbations of label maps.

Each kind either provably preserves the per-class overlap topology
(boundary_jitter, which verifies after the fact and redraws on violation)
or changes it in one declared direction:

* split_pred cuts one predicted region into two pieces that still overlap
  a common gt region, so the over-segmentation measure cannot decrease;
* merge_preds bridges two predicted regions that each overlap at most one
  gt region, so the under-segmentation measure cannot decrease;
* add_false_positive adds a predicted region overlapping no gt region of
  its class, which only dilutes the over-segmentation ratio;
* remove_pred deletes one predicted region, which cannot raise the excess
  overlap count.

Every kind is a pure function of (maps, spec); retries fold the attempt
index into the seed, so outcomes stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import PerturbationError
from ..maps import LabelMap, check_paired
from ..regions import build_overlap_graph, extract_regions

KINDS = (
    "boundary_jitter",
    "split_pred",
    "merge_preds",
    "add_false_positive",
    "remove_pred",
)

_MAX_ATTEMPTS = 32

_STRUCTURE = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool),
    8: np.ones((3, 3), dtype=bool),
}


@dataclass(frozen=True)
class PerturbationSpec:
    """What to do, how hard, and with which random stream."""

    kind: str
    magnitude: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PerturbationError(f"unknown perturbation kind {self.kind!r}")
        if self.magnitude < 1:
            raise PerturbationError(f"magnitude must be >= 1, got {self.magnitude}")


def _fg_classes(label_map, background_id):
    return [k for k in range(label_map.num_classes) if k != background_id]


def _topology(reference, target, classes, connectivity):
    """Per-class (gt count, pred count, overlap pair set) signature."""
    signature = {}
    for k in classes:
        graph = build_overlap_graph(
            extract_regions(reference, k, connectivity),
            extract_regions(target, k, connectivity),
        )
        pairs = frozenset(zip(graph.edge_gt.tolist(), graph.edge_pred.tolist()))
        signature[k] = (graph.gt_count, graph.pred_count, pairs)
    return signature


def perturb(target, spec, *, reference=None, connectivity=8, background_id=0):
    """Apply one perturbation to ``target`` and return the new map.

    ``reference`` is the counterpart map (the gt when perturbing a
    prediction); every kind except remove_pred needs it, either to verify
    preserved topology or to steer the structural change.
    """
    if connectivity not in _STRUCTURE:
        raise PerturbationError(f"connectivity must be 4 or 8, got {connectivity}")
    if spec.kind != "remove_pred":
        if reference is None:
            raise PerturbationError(f"{spec.kind} needs the counterpart map")
        check_paired(reference, target)
    handler = {
        "boundary_jitter": _boundary_jitter,
        "split_pred": _split_pred,
        "merge_preds": _merge_preds,
        "add_false_positive": _add_false_positive,
        "remove_pred": _remove_pred,
    }[spec.kind]
    return handler(target, spec, reference, connectivity, background_id)


def _boundary_jitter(target, spec, reference, connectivity, background_id):
    classes = _fg_classes(target, background_id)
    before = _topology(reference, target, classes, connectivity)
    structure = _STRUCTURE[connectivity]
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng([spec.seed, attempt])
        out = target.data.copy()
        for k in classes:
            regions = extract_regions(target, k, connectivity)
            for rid in range(regions.region_count):
                mode = int(rng.integers(0, 3))
                amount = int(rng.integers(1, spec.magnitude + 1))
                if mode == 0:
                    continue
                mask = regions.mask(rid)
                if mode == 1:
                    grown = ndimage.binary_dilation(
                        mask, structure=structure, iterations=amount
                    )
                    # Claim only pixels free in both the original map and
                    # whatever this pass already produced.
                    new = grown & (target.data == background_id) & (out == background_id)
                    out[new] = k
                else:
                    kept = ndimage.binary_erosion(
                        mask, structure=structure, iterations=amount
                    )
                    if not kept.any():
                        continue
                    out[mask & ~kept] = background_id
        candidate = target.replace_data(out)
        if _topology(reference, candidate, classes, connectivity) == before:
            return candidate
    raise PerturbationError(
        f"boundary_jitter could not preserve topology in {_MAX_ATTEMPTS} attempts"
    )


def _split_candidates(target, reference, classes, connectivity):
    found = []
    for k in classes:
        gt_regions = extract_regions(reference, k, connectivity)
        pred_regions = extract_regions(target, k, connectivity)
        graph = build_overlap_graph(gt_regions, pred_regions)
        by_pred = {}
        for g, s in zip(graph.edge_gt.tolist(), graph.edge_pred.tolist()):
            by_pred.setdefault(s, []).append(g)
        for s, gts in sorted(by_pred.items()):
            found.append((k, s, tuple(gts), gt_regions, pred_regions))
    return found


def _split_pred(target, spec, reference, connectivity, background_id):
    classes = _fg_classes(target, background_id)
    candidates = _split_candidates(target, reference, classes, connectivity)
    if not candidates:
        raise PerturbationError("no predicted region overlaps a gt region; cannot split")
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng([spec.seed, attempt])
        k, s, gts, gt_regions, pred_regions = candidates[
            int(rng.integers(0, len(candidates)))
        ]
        g = gts[int(rng.integers(0, len(gts)))]
        region = pred_regions.mask(s)
        overlap = region & gt_regions.mask(g)
        rows = np.flatnonzero(overlap.any(axis=1))
        cols = np.flatnonzero(overlap.any(axis=0))
        cuts = []
        for c in range(cols[0] + 1, cols[-1]):
            if overlap[:, :c].any() and overlap[:, c + 1 :].any():
                cuts.append(("col", c))
        for r in range(rows[0] + 1, rows[-1]):
            if overlap[:r, :].any() and overlap[r + 1 :, :].any():
                cuts.append(("row", r))
        rng.shuffle(cuts)
        for axis, pos in cuts:
            cut = region.copy()
            if axis == "col":
                keep = np.ones_like(region)
                keep[:, pos] = False
            else:
                keep = np.ones_like(region)
                keep[pos, :] = False
            cut &= ~keep
            remaining = region & keep
            pieces, count = ndimage.label(remaining, structure=_STRUCTURE[connectivity])
            if count != 2:
                continue
            piece_a = pieces == 1
            piece_b = pieces == 2
            gmask = gt_regions.mask(g)
            if not (gmask & piece_a).any() or not (gmask & piece_b).any():
                continue
            if any(not (gt_regions.mask(gg) & remaining).any() for gg in gts):
                continue
            out = target.data.copy()
            out[cut] = background_id
            return target.replace_data(out)
    raise PerturbationError(f"split_pred found no valid cut in {_MAX_ATTEMPTS} attempts")


def _manhattan_path(a, b):
    """4-connected staircase from a to b, endpoints included."""
    (r0, c0), (r1, c1) = a, b
    cells = []
    step = 1 if r1 >= r0 else -1
    for r in range(r0, r1, step):
        cells.append((r, c0))
    step = 1 if c1 >= c0 else -1
    for c in range(c0, c1, step):
        cells.append((r1, c))
    cells.append((r1, c1))
    return cells


def _merge_preds(target, spec, reference, connectivity, background_id):
    classes = _fg_classes(target, background_id)
    pairs = []
    for k in classes:
        pred_regions = extract_regions(target, k, connectivity)
        graph = build_overlap_graph(
            extract_regions(reference, k, connectivity), pred_regions
        )
        degrees = graph.pred_degrees()
        eligible = [s for s in range(pred_regions.region_count) if degrees[s] <= 1]
        for i, a in enumerate(eligible):
            for b in eligible[i + 1 :]:
                pairs.append((k, a, b, pred_regions))
    if not pairs:
        raise PerturbationError(
            "no two predicted regions with at most one gt overlap each; cannot merge"
        )
    old_counts = {
        k: extract_regions(target, k, connectivity).region_count for k in classes
    }
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng([spec.seed, attempt])
        k, a, b, pred_regions = pairs[int(rng.integers(0, len(pairs)))]
        pix_a = np.argwhere(pred_regions.mask(a))
        pix_b = np.argwhere(pred_regions.mask(b))
        dists = np.abs(pix_a[:, None, :] - pix_b[None, :, :]).sum(axis=2)
        ia, ib = np.unravel_index(int(np.argmin(dists)), dists.shape)
        path = _manhattan_path(tuple(pix_a[ia]), tuple(pix_b[ib]))
        in_pair = pred_regions.mask(a) | pred_regions.mask(b)
        bridge = [(r, c) for r, c in path if not in_pair[r, c]]
        if any(target.data[r, c] != background_id for r, c in bridge):
            continue
        out = target.data.copy()
        for r, c in bridge:
            out[r, c] = k
        candidate = target.replace_data(out)
        new_counts = {
            kk: extract_regions(candidate, kk, connectivity).region_count
            for kk in classes
        }
        expected = dict(old_counts)
        expected[k] = old_counts[k] - 1
        if new_counts == expected:
            return candidate
    raise PerturbationError(f"merge_preds found no clean bridge in {_MAX_ATTEMPTS} attempts")


def _add_false_positive(target, spec, reference, connectivity, background_id):
    classes = [
        k for k in _fg_classes(target, background_id) if (target.data == k).any()
    ] or _fg_classes(target, background_id)
    if not classes:
        raise PerturbationError("map has no foreground classes")
    h, w = target.shape
    for attempt in range(_MAX_ATTEMPTS * 8):
        rng = np.random.default_rng([spec.seed, attempt])
        k = int(classes[int(rng.integers(0, len(classes)))])
        rh = int(rng.integers(2, 3 + spec.magnitude))
        rw = int(rng.integers(2, 3 + spec.magnitude))
        if rh > h or rw > w:
            continue
        r = int(rng.integers(0, h - rh + 1))
        c = int(rng.integers(0, w - rw + 1))
        box = (slice(r, r + rh), slice(c, c + rw))
        if (target.data[box] != background_id).any():
            continue
        if (reference.data[box] == k).any():
            continue
        # Expanded box: the new region must not touch same-class pixels.
        grown = (
            slice(max(r - 1, 0), min(r + rh + 1, h)),
            slice(max(c - 1, 0), min(c + rw + 1, w)),
        )
        if (target.data[grown] == k).any():
            continue
        out = target.data.copy()
        out[box] = k
        return target.replace_data(out)
    raise PerturbationError(
        f"add_false_positive found no free spot in {_MAX_ATTEMPTS * 8} attempts"
    )


def _remove_pred(target, spec, reference, connectivity, background_id):
    del reference
    choices = []
    for k in _fg_classes(target, background_id):
        regions = extract_regions(target, k, connectivity)
        choices.extend((k, rid) for rid in range(regions.region_count))
    if not choices:
        raise PerturbationError("no predicted region to remove")
    rng = np.random.default_rng([spec.seed, 0])
    k, rid = choices[int(rng.integers(0, len(choices)))]
    regions = extract_regions(target, k, connectivity)
    out = target.data.copy()
    out[regions.mask(rid)] = background_id
    return target.replace_data(out)
