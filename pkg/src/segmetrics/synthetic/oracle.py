"""Slow reference evaluator used to crosscheck the fast pipeline.

Everything here is recomputed from first principles with plain Python
containers: regions come from a breadth-first flood fill over row-major
scans, overlaps from literal set intersections, and every statistic from
the written-out formula. Nothing is shared with the production code paths
except the record dataclasses and the map containers, so agreement between
the two implementations is meaningful evidence rather than an identity.

Deliberately not optimized; meant for small canvases.
"""

from __future__ import annotations

import math
from collections import deque

from ..errors import InvalidPairingError, UndefinedMetricError
from ..maps import check_paired
from ..report import ClassRecord, ImageRecord

_STEPS = {
    4: ((-1, 0), (0, -1), (0, 1), (1, 0)),
    8: tuple(
        (dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)
    ),
}


def flood_fill_regions(grid, class_id, connectivity):
    """Connected regions of one class as frozensets of (row, col) pixels.

    Scans the grid row-major and grows each unvisited class pixel into a
    region by breadth-first search, so regions come out ordered by their
    first pixel in scan order.
    """
    height = len(grid)
    width = len(grid[0]) if height else 0
    steps = _STEPS[connectivity]
    seen = [[False] * width for _ in range(height)]
    regions = []
    for row in range(height):
        for col in range(width):
            if grid[row][col] != class_id or seen[row][col]:
                continue
            seen[row][col] = True
            queue = deque([(row, col)])
            pixels = set()
            while queue:
                r, c = queue.popleft()
                pixels.add((r, c))
                for dr, dc in steps:
                    nr, nc = r + dr, c + dc
                    if (
                        0 <= nr < height
                        and 0 <= nc < width
                        and not seen[nr][nc]
                        and grid[nr][nc] == class_id
                    ):
                        seen[nr][nc] = True
                        queue.append((nr, nc))
            regions.append(frozenset(pixels))
    return regions


def _overlaps(gt_regions, pred_regions):
    """All-pairs intersection sizes as a {(gt id, pred id): count} dict."""
    out = {}
    for g, gp in enumerate(gt_regions):
        for s, sp in enumerate(pred_regions):
            shared = len(gp & sp)
            if shared:
                out[(g, s)] = shared
    return out


def _squashed_measure(split_count, overlaps, n, m, *, gt_is_split):
    """One direction of the region measure from raw overlap counts.

    Returns (involved split-side ids, involved other-side ids, ratio,
    excess, tanh value). ``gt_is_split`` picks which tuple slot of the
    overlap keys is the side being fragmented.
    """
    degree = {i: 0 for i in range(split_count)}
    partners = {}
    for (g, s), _ in overlaps.items():
        a, b = (g, s) if gt_is_split else (s, g)
        degree[a] += 1
        partners.setdefault(a, set()).add(b)
    split_ids = {a for a, d in degree.items() if d >= 2}
    involved = set()
    for a in split_ids:
        involved |= partners[a]
    excess = sum(max(d - 1, 0) for d in degree.values())
    if n == 0 or m == 0:
        ratio = 0.0
    else:
        ratio = (len(split_ids) * len(involved)) / (n * m)
    return split_ids, involved, ratio, excess, math.tanh(ratio * excess)


def _iou_dice(gt_grid, pred_grid, class_id, ignore_id):
    gt_count = pred_count = inter = 0
    for gt_row, pred_row in zip(gt_grid, pred_grid):
        for a, b in zip(gt_row, pred_row):
            if ignore_id is not None and a == ignore_id:
                continue
            if a == class_id:
                gt_count += 1
                if b == class_id:
                    inter += 1
            if b == class_id:
                pred_count += 1
    union = gt_count + pred_count - inter
    iou = None if union == 0 else 1.0 - inter / union
    denom = gt_count + pred_count
    dice = None if denom == 0 else 1.0 - 2.0 * inter / denom
    return iou, dice


def _pixel_error(gt_grid, pred_grid, ignore_id):
    total = wrong = 0
    for gt_row, pred_row in zip(gt_grid, pred_grid):
        for a, b in zip(gt_row, pred_row):
            if ignore_id is not None and a == ignore_id:
                continue
            total += 1
            if a != b:
                wrong += 1
    if total == 0:
        raise UndefinedMetricError("every pixel is ignored; pixel error undefined")
    return wrong / total


def _consistency_errors(gt_grid, pred_grid, num_classes, ignore_id, background_id):
    """Per-class consistency error, summed pixel by pixel.

    A pixel's refinement error in each direction depends only on its
    (gt label, pred label) pair, so the per-pair terms are memoized and
    replayed over the class support.
    """
    joint = {}
    gt_totals = {}
    pred_totals = {}
    pairs = []
    for gt_row, pred_row in zip(gt_grid, pred_grid):
        row_pairs = []
        for a, b in zip(gt_row, pred_row):
            if ignore_id is not None and (a == ignore_id or b == ignore_id):
                row_pairs.append(None)
                continue
            row_pairs.append((a, b))
            joint[(a, b)] = joint.get((a, b), 0) + 1
            gt_totals[a] = gt_totals.get(a, 0) + 1
            pred_totals[b] = pred_totals.get(b, 0) + 1
        pairs.append(row_pairs)

    def directional(pair):
        a, b = pair
        if pred_totals.get(a, 0) == 0 or gt_totals.get(b, 0) == 0:
            return 1.0, 1.0
        count = joint[pair]
        fwd = (gt_totals[a] - count) / gt_totals[a]
        bwd = (pred_totals[b] - count) / pred_totals[b]
        return fwd, bwd

    memo = {}
    per_class = {}
    for k in range(num_classes):
        if k == background_id:
            continue
        fwd_terms = []
        bwd_terms = []
        for row_pairs in pairs:
            for pair in row_pairs:
                if pair is None or (pair[0] != k and pair[1] != k):
                    continue
                if pair not in memo:
                    memo[pair] = directional(pair)
                fwd, bwd = memo[pair]
                fwd_terms.append(fwd)
                bwd_terms.append(bwd)
        if not fwd_terms:
            per_class[k] = None
        else:
            support = len(fwd_terms)
            per_class[k] = min(math.fsum(fwd_terms), math.fsum(bwd_terms)) / support
    return per_class


def _persello(gt_regions, pred_regions, overlaps):
    n = len(gt_regions)
    if n == 0:
        return None, None
    os_terms = []
    us_terms = []
    for g in range(n):
        best = None
        for s in range(len(pred_regions)):
            count = overlaps.get((g, s))
            if count is None:
                continue
            if best is None or count > best[0] or (count == best[0] and s < best[1]):
                best = (count, s)
        if best is None:
            os_terms.append(1.0)
            us_terms.append(1.0)
        else:
            count, s = best
            os_terms.append(1.0 - count / len(gt_regions[g]))
            us_terms.append(1.0 - count / len(pred_regions[s]))
    return math.fsum(os_terms) / n, math.fsum(us_terms) / n


def _pair_ious(gt_regions, pred_regions, overlaps):
    ious = {}
    for (g, s), count in overlaps.items():
        union = len(gt_regions[g]) + len(pred_regions[s]) - count
        ious[(g, s)] = count / union
    return ious


def _precision_errors(gt_regions, pred_regions, overlaps, thresholds):
    n, m = len(gt_regions), len(pred_regions)
    ious = _pair_ious(gt_regions, pred_regions, overlaps)
    order = sorted(range(m), key=lambda s: (-len(pred_regions[s]), s))
    errors = {}
    counts = {}
    for threshold in thresholds:
        taken = set()
        tp = 0
        for s in order:
            best = None
            for g in range(n):
                iou = ious.get((g, s))
                if iou is None or iou < threshold or g in taken:
                    continue
                if best is None or iou > best[1] or (iou == best[1] and g < best[0]):
                    best = (g, iou)
            if best is not None:
                taken.add(best[0])
                tp += 1
        if m > 0:
            precision = tp / m
        else:
            precision = 0.0 if n > 0 else 1.0
        errors[threshold] = 1.0 - precision
        counts[threshold] = (tp, m - tp, n - tp)
    mean = math.fsum(errors[t] for t in thresholds) / len(thresholds)
    return errors, mean, counts


def _panoptic(gt_regions, pred_regions, overlaps):
    n, m = len(gt_regions), len(pred_regions)
    ious = _pair_ious(gt_regions, pred_regions, overlaps)
    matched = [(pair, iou) for pair, iou in sorted(ious.items()) if iou > 0.5]
    assert len({g for (g, _), _ in matched}) == len(matched)
    assert len({s for (_, s), _ in matched}) == len(matched)
    tp = len(matched)
    counts = (tp, m - tp, n - tp)
    if n == 0 and m == 0:
        return None, counts
    quality = math.fsum(iou for _, iou in matched) / (tp + (m - tp) / 2 + (n - tp) / 2)
    return 1.0 - quality, counts


def oracle_record(gt, pred, config, *, image_id="pair"):
    """Reference ImageRecord for one pair, mirroring the fast evaluator.

    Confidence filtering is out of scope here; the config must not request
    it, which keeps the two implementations comparable input for input.
    """
    check_paired(gt, pred)
    if getattr(config, "confidence_threshold", None) is not None:
        raise InvalidPairingError("the reference evaluator does not filter by confidence")
    selected = set(config.metrics)
    connectivity = config.connectivity
    gt_grid = gt.data.tolist()
    pred_grid = pred.data.tolist()
    record = ImageRecord(image_id=image_id)
    if "pixel" in selected:
        record.pixel_error = _pixel_error(gt_grid, pred_grid, gt.ignore_id)
    gce_per_class = (
        _consistency_errors(
            gt_grid, pred_grid, config.num_classes, gt.ignore_id, config.background_id
        )
        if "gce" in selected
        else None
    )
    for k in range(config.num_classes):
        if k == config.background_id:
            continue
        gt_regions = flood_fill_regions(gt_grid, k, connectivity)
        pred_regions = flood_fill_regions(pred_grid, k, connectivity)
        n, m = len(gt_regions), len(pred_regions)
        cr = ClassRecord(class_id=k, applicable=n > 0 or m > 0)
        record.classes[k] = cr
        if not cr.applicable:
            continue
        overlaps = _overlaps(gt_regions, pred_regions)
        split_gt, contributing, over_ratio, over_excess, over_value = _squashed_measure(
            n, overlaps, n, m, gt_is_split=True
        )
        merging, merged_gt, under_ratio, under_excess, under_value = _squashed_measure(
            m, overlaps, n, m, gt_is_split=False
        )
        cr.gt_regions = n
        cr.pred_regions = m
        cr.gt_split = len(split_gt)
        cr.pred_contributing = len(contributing)
        cr.pred_merging = len(merging)
        cr.gt_merged = len(merged_gt)
        cr.over_excess = over_excess
        cr.under_excess = under_excess
        cr.over_ratio = over_ratio
        cr.under_ratio = under_ratio
        if "rom" in selected:
            cr.rom = over_value
        if "rum" in selected:
            cr.rum = under_value
        if selected & {"iou", "dice"}:
            iou, dice = _iou_dice(gt_grid, pred_grid, k, gt.ignore_id)
            if "iou" in selected:
                cr.iou_error = iou
            if "dice" in selected:
                cr.dice_error = dice
        if gce_per_class is not None:
            cr.gce = gce_per_class[k]
        if "pe" in selected:
            cr.pe_os, cr.pe_us = _persello(gt_regions, pred_regions, overlaps)
        if "ap" in selected:
            errors, mean, counts = _precision_errors(
                gt_regions, pred_regions, overlaps, config.ap_thresholds
            )
            cr.ap_errors = errors
            cr.ap_error = mean
            cr.ap_counts = counts
        if "pq" in selected:
            cr.pq_error, cr.pq_counts = _panoptic(gt_regions, pred_regions, overlaps)
    return record
