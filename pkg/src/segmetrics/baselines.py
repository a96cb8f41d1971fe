"""Comparison metrics the region measures are evaluated against.

Pixel-overlap scores (IOU, Dice, pixel error), the consistency errors of
Martin et al. (local/global refinement), the per-region over- and
under-segmentation errors of Persello and Bruzzone, and the two
region-matching scores used by detection-style benchmarks: precision over
an IOU-threshold sweep and panoptic quality.

All of them are reported as errors in [0, 1], where 0 is a perfect
prediction, so they compare directly against the region-wise measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError
from .maps import check_paired

AP_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class ClassPixelStats:
    """Pixel overlap counts for one class, ignore pixels excluded."""

    class_id: int
    intersection: int
    union: int
    gt_pixels: int
    pred_pixels: int

    def __post_init__(self):
        assert self.union == self.gt_pixels + self.pred_pixels - self.intersection


def _confusion(gt, pred, *, symmetric_valid=False):
    """Confusion matrix over (num_classes + 1) bins; the extra bin holds the
    unknown sentinel. Prediction pixels equal to the ignore id are folded
    into the unknown bin so they count as wrong rather than crashing."""
    check_paired(gt, pred)
    side = gt.num_classes + 1
    a = gt.data
    b = pred.data
    if gt.ignore_id is None:
        valid = np.ones(a.shape, dtype=bool)
    else:
        valid = a != gt.ignore_id
        if symmetric_valid:
            valid &= b != gt.ignore_id
    a = a[valid]
    b = b[valid]
    if gt.ignore_id is not None and not symmetric_valid:
        b = np.where(b == gt.ignore_id, gt.num_classes, b)
    cm = np.bincount(a * side + b, minlength=side * side).reshape(side, side)
    return cm.astype(np.int64)


def pixel_stats(gt, pred, class_ids=None):
    """Per-class ClassPixelStats for the requested classes (default: all)."""
    cm = _confusion(gt, pred)
    if class_ids is None:
        class_ids = range(gt.num_classes)
    gt_n = cm.sum(axis=1)
    pred_n = cm.sum(axis=0)
    out = {}
    for k in class_ids:
        inter = int(cm[k, k])
        g, p = int(gt_n[k]), int(pred_n[k])
        out[k] = ClassPixelStats(int(k), inter, g + p - inter, g, p)
    return out


def iou_error(stats):
    """Per-class 1 - IOU plus the mean over classes where it is defined.

    Classes with an empty union have no defined value and are skipped in
    the mean; a dict with no defined class yields a None mean.
    """
    per_class = {}
    for k, st in stats.items():
        per_class[k] = None if st.union == 0 else 1.0 - st.intersection / st.union
    defined = [v for v in per_class.values() if v is not None]
    mean = math.fsum(defined) / len(defined) if defined else None
    return per_class, mean


def dice_error(stats):
    """Per-class 1 - Dice plus the mean, same conventions as iou_error."""
    per_class = {}
    for k, st in stats.items():
        denom = st.gt_pixels + st.pred_pixels
        per_class[k] = None if denom == 0 else 1.0 - 2.0 * st.intersection / denom
    defined = [v for v in per_class.values() if v is not None]
    mean = math.fsum(defined) / len(defined) if defined else None
    return per_class, mean


def pixel_error(gt, pred):
    """Fraction of non-ignore pixels labeled differently."""
    check_paired(gt, pred)
    if gt.ignore_id is None:
        valid = np.ones(gt.shape, dtype=bool)
    else:
        valid = gt.data != gt.ignore_id
    total = int(valid.sum())
    if total == 0:
        raise UndefinedMetricError("every pixel is ignored; pixel error undefined")
    correct = int((gt.data[valid] == pred.data[valid]).sum())
    return (total - correct) / total


def local_refinement_error(pred, gt, pixel):
    """How much of gt's segment at a pixel is missing from pred's segment.

    Segments are the full-map sets of non-ignore pixels sharing the label
    at ``pixel``. When either map's label there has no support at all in
    the other map, the error is 1 by convention; the raw set quotient would
    read such a total miss as near-perfect.
    """
    check_paired(pred, gt)
    r, c = int(pixel[0]), int(pixel[1])
    if not (0 <= r < gt.height and 0 <= c < gt.width):
        raise UndefinedMetricError(f"pixel ({r}, {c}) outside {gt.shape}")
    a = int(gt.data[r, c])
    b = int(pred.data[r, c])
    if gt.ignore_id is not None and gt.ignore_id in (a, b):
        raise UndefinedMetricError(f"pixel ({r}, {c}) is ignored")
    if gt.ignore_id is None:
        valid = np.ones(gt.shape, dtype=bool)
    else:
        valid = (gt.data != gt.ignore_id) & (pred.data != gt.ignore_id)
    gt_a = (gt.data == a) & valid
    if not ((pred.data == a) & valid).any() or not ((gt.data == b) & valid).any():
        return 1.0
    inter = int((gt_a & (pred.data == b)).sum())
    n = int(gt_a.sum())
    return (n - inter) / n


def global_consistency_error(gt, pred, *, background_id=0):
    """Per-foreground-class consistency error and its mean.

    For each class, sums the local refinement error over the class's
    support (pixels holding the class in either map), in both refinement
    directions, and keeps the cheaper direction normalized by the support
    size. The result is symmetric in its two arguments to the bit: both
    directional sums are computed with exact summation, and the valid mask
    requires both maps to be non-ignore at a pixel.
    """
    cm = _confusion(gt, pred, symmetric_valid=True)
    side = gt.num_classes + 1
    gt_n = cm.sum(axis=1)
    pred_n = cm.sum(axis=0)
    per_class = {}
    for k in range(gt.num_classes):
        if k == background_id:
            continue
        fwd_terms = []
        bwd_terms = []
        support = 0
        for i in range(side):
            for j in range(side):
                count = int(cm[i, j])
                if count == 0 or (i != k and j != k):
                    continue
                support += count
                if pred_n[i] == 0 or gt_n[j] == 0:
                    fwd = bwd = 1.0
                else:
                    fwd = (int(gt_n[i]) - count) / int(gt_n[i])
                    bwd = (int(pred_n[j]) - count) / int(pred_n[j])
                fwd_terms.append(count * fwd)
                bwd_terms.append(count * bwd)
        if support == 0:
            per_class[k] = None
        else:
            per_class[k] = min(math.fsum(fwd_terms), math.fsum(bwd_terms)) / support
    defined = [per_class[k] for k in sorted(per_class) if per_class[k] is not None]
    mean = math.fsum(defined) / len(defined) if defined else None
    return per_class, mean


def persello_errors(graph):
    """Mean per-gt-region over- and under-segmentation errors.

    Each gt region is paired with its largest-overlap prediction (ties
    broken toward the smaller region id). Unmatched gt regions score 1 on
    both errors. Returns (None, None) when there are no gt regions.
    """
    n = graph.gt_count
    if n == 0:
        return None, None
    best = {}
    for g, s, count in zip(
        graph.edge_gt.tolist(), graph.edge_pred.tolist(), graph.edge_pixels.tolist()
    ):
        cur = best.get(g)
        if cur is None or count > cur[0] or (count == cur[0] and s < cur[1]):
            best[g] = (count, s)
    os_terms = []
    us_terms = []
    for g in range(n):
        if g not in best:
            os_terms.append(1.0)
            us_terms.append(1.0)
            continue
        count, s = best[g]
        os_terms.append(1.0 - count / int(graph.gt_areas[g]))
        us_terms.append(1.0 - count / int(graph.pred_areas[s]))
    return math.fsum(os_terms) / n, math.fsum(us_terms) / n


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching predictions to gt regions at one IOU threshold."""

    threshold: float
    matches: tuple  # (gt id, pred id, iou) triples in claim order
    tp: int
    fp: int
    fn: int

    def __post_init__(self):
        assert self.tp == len(self.matches)
        assert all(iou >= self.threshold for _, _, iou in self.matches)


def _edge_ious(graph):
    out = {}
    for g, s, count in zip(
        graph.edge_gt.tolist(), graph.edge_pred.tolist(), graph.edge_pixels.tolist()
    ):
        union = int(graph.gt_areas[g]) + int(graph.pred_areas[s]) - count
        out.setdefault(s, []).append((g, count / union))
    return out


def _prediction_order(graph, confidences):
    ids = range(graph.pred_count)
    if confidences is not None:
        if len(confidences) != graph.pred_count:
            raise UndefinedMetricError(
                f"{len(confidences)} confidences for {graph.pred_count} predictions"
            )
        return sorted(ids, key=lambda s: (-float(confidences[s]), s))
    return sorted(ids, key=lambda s: (-int(graph.pred_areas[s]), s))


def average_precision_errors(graph, thresholds=AP_THRESHOLDS, confidences=None):
    """Precision-based error at each IOU threshold, plus the mean.

    Predictions are visited in descending confidence order (descending
    area when no confidences are given, ties by region id). Each claims
    the unclaimed gt region of its class with the highest IOU at or above
    the threshold, if any; precision is TP over all predictions. With gt
    regions present but no predictions the precision is 0 by convention,
    with neither present it is 1.

    Returns (per-threshold error dict, mean error, per-threshold
    MatchResult dict).
    """
    if not thresholds:
        raise UndefinedMetricError("at least one IOU threshold is required")
    n, m = graph.gt_count, graph.pred_count
    incident = _edge_ious(graph)
    order = _prediction_order(graph, confidences)
    errors = {}
    details = {}
    for threshold in thresholds:
        taken = [False] * n
        matches = []
        for s in order:
            best = None
            for g, iou in incident.get(s, ()):
                if taken[g] or iou < threshold:
                    continue
                if best is None or iou > best[1] or (iou == best[1] and g < best[0]):
                    best = (g, iou)
            if best is not None:
                taken[best[0]] = True
                matches.append((best[0], s, best[1]))
        tp = len(matches)
        if m > 0:
            precision = tp / m
        else:
            precision = 0.0 if n > 0 else 1.0
        errors[threshold] = 1.0 - precision
        details[threshold] = MatchResult(threshold, tuple(matches), tp, m - tp, n - tp)
    mean = math.fsum(errors[t] for t in thresholds) / len(thresholds)
    return errors, mean, details


def panoptic_quality_error(graph):
    """1 - PQ, with the standard unique matching at IOU > 0.5.

    Pairs with IOU above one half are provably unique per region, which is
    asserted. Returns (None, empty MatchResult) when both sides are empty.
    """
    matches = []
    for s, pairs in sorted(_edge_ious(graph).items()):
        for g, iou in pairs:
            if iou > 0.5:
                matches.append((g, s, iou))
    gts = [g for g, _, _ in matches]
    preds = [s for _, s, _ in matches]
    assert len(set(gts)) == len(gts), "gt region matched twice at IOU > 0.5"
    assert len(set(preds)) == len(preds), "prediction matched twice at IOU > 0.5"
    matches.sort()
    n, m = graph.gt_count, graph.pred_count
    tp = len(matches)
    result = MatchResult(0.5, tuple(matches), tp, m - tp, n - tp)
    if n == 0 and m == 0:
        return None, result
    quality = math.fsum(iou for _, _, iou in matches) / (tp + (m - tp) / 2 + (n - tp) / 2)
    return 1.0 - quality, result
