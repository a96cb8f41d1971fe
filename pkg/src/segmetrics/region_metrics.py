"""Region-wise over- and under-segmentation measures, plus confidence
filtering of predicted regions.

Both measures read a region overlap graph for one class. Over-segmentation
asks how often one ground-truth region is carved into several predictions;
under-segmentation is the exact mirror, asking how often several
ground-truth regions are fused into one prediction. Each measure combines

* a participation ratio: (involved gt regions * involved predictions)
  divided by (all gt regions * all predictions), and
* an excess count: for every region on the fragmented side, the number of
  counterpart regions beyond the first.

The final value is ``tanh(ratio * excess)``, squashing the unbounded count
into [0, 1). Either side being empty makes the ratio 0 by convention, and
the excess count is then naturally 0 as well, so the measure reads 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidClassError
from .maps import LabelMap, check_same_canvas
from .regions import extract_regions


@dataclass(frozen=True)
class OverSegmentation:
    """Over-segmentation accounting for one class.

    gt_ids: ground-truth regions overlapped by two or more predictions.
    pred_ids: predictions overlapping any such ground-truth region.
    ratio: participation ratio of both sides, in [0, 1].
    excess: total predictions beyond one per ground-truth region.
    value: tanh(ratio * excess).
    """

    gt_ids: frozenset
    pred_ids: frozenset
    ratio: float
    excess: int
    value: float


@dataclass(frozen=True)
class UnderSegmentation:
    """Mirror accounting: predictions covering several gt regions.

    pred_ids: predictions overlapping two or more ground-truth regions.
    gt_ids: ground-truth regions overlapped by any such prediction.
    """

    gt_ids: frozenset
    pred_ids: frozenset
    ratio: float
    excess: int
    value: float


def over_segmentation_sets(graph):
    """Sets feeding the over-segmentation measure.

    Returns (gt ids split by >= 2 predictions, predictions touching any of
    those gt regions, per-gt overlapping-prediction counts).
    """
    degrees = graph.gt_degrees()
    split_gt = frozenset(np.flatnonzero(degrees >= 2).tolist())
    if split_gt:
        involved = {
            int(s)
            for g, s in zip(graph.edge_gt.tolist(), graph.edge_pred.tolist())
            if g in split_gt
        }
    else:
        involved = set()
    return split_gt, frozenset(involved), degrees


def under_segmentation_sets(graph):
    """Mirror of over_segmentation_sets on the prediction side.

    Returns (gt ids touching any merging prediction, predictions covering
    >= 2 gt regions, per-prediction overlapping-gt counts).
    """
    degrees = graph.pred_degrees()
    merging_pred = frozenset(np.flatnonzero(degrees >= 2).tolist())
    if merging_pred:
        involved = {
            int(g)
            for g, s in zip(graph.edge_gt.tolist(), graph.edge_pred.tolist())
            if s in merging_pred
        }
    else:
        involved = set()
    return frozenset(involved), merging_pred, degrees


def rom(graph):
    """Region-wise over-segmentation measure for one class."""
    gt_ids, pred_ids, degrees = over_segmentation_sets(graph)
    excess = int(np.maximum(degrees - 1, 0).sum())
    n, m = graph.gt_count, graph.pred_count
    if n == 0 or m == 0:
        ratio = 0.0
    else:
        ratio = (len(gt_ids) * len(pred_ids)) / (n * m)
    return OverSegmentation(gt_ids, pred_ids, ratio, excess, math.tanh(ratio * excess))


def rum(graph):
    """Region-wise under-segmentation measure for one class."""
    gt_ids, pred_ids, degrees = under_segmentation_sets(graph)
    excess = int(np.maximum(degrees - 1, 0).sum())
    n, m = graph.gt_count, graph.pred_count
    if n == 0 or m == 0:
        ratio = 0.0
    else:
        ratio = (len(gt_ids) * len(pred_ids)) / (n * m)
    return UnderSegmentation(gt_ids, pred_ids, ratio, excess, math.tanh(ratio * excess))


@dataclass(frozen=True)
class RegionConfidence:
    """Mean model confidence over one predicted region."""

    class_id: int
    region_id: int
    pixel_count: int
    mean_confidence: float


def region_confidences(regions, confidence):
    """Mean confidence of every region in a RegionSet.

    Means are plain arithmetic averages over the region's pixels; they stay
    within floating-point rounding of [0, 1], and a threshold of zero can
    never relabel anything because confidences are non-negative.
    """
    if regions.shape != confidence.shape:
        raise DimensionMismatchError(
            f"regions cover {regions.shape}, confidence {confidence.shape}"
        )
    count = regions.region_count
    if count == 0:
        return []
    sums = np.bincount(
        regions.labels.ravel(), weights=confidence.data.ravel(), minlength=count + 1
    )[1:]
    means = sums / regions.areas
    return [
        RegionConfidence(regions.class_id, i, int(regions.areas[i]), float(means[i]))
        for i in range(count)
    ]


def apply_confidence_threshold(pred, confidence, threshold, connectivity=8, *, background_id=0):
    """Relabel low-confidence predicted regions to the unknown class.

    Every foreground region whose mean confidence is strictly below the
    threshold is reassigned wholesale to the unknown id (num_classes).
    Thresholding happens before any metric sees the map, and a threshold of
    0.0 returns an identical map since means are never negative.
    """
    if not 0.0 <= threshold <= 1.0:
        raise InvalidClassError(f"threshold {threshold} outside [0, 1]")
    if connectivity not in (4, 8):
        raise InvalidClassError(f"connectivity must be 4 or 8, got {connectivity}")
    check_same_canvas(pred, confidence, "prediction and confidence")
    out = pred.data.copy()
    for class_id in range(pred.num_classes):
        if class_id == background_id:
            continue
        regions = extract_regions(pred, class_id, connectivity)
        if regions.region_count == 0:
            continue
        means = np.array(
            [rc.mean_confidence for rc in region_confidences(regions, confidence)]
        )
        low = np.flatnonzero(means < threshold)
        if len(low):
            drop = np.isin(regions.labels, low + 1)
            out[drop] = pred.unknown_id
    return LabelMap(out, pred.num_classes, pred.ignore_id)
