"""Per-class region extraction and region overlap graphs.

A region is a maximal connected set of same-class pixels under 4- or
8-connectivity. Region ids are assigned deterministically by the row-major
position of each region's first pixel, so the same input always yields the
same labeling regardless of how the underlying labeling pass visits the
grid. The overlap graph between a ground-truth and a predicted region set
records, for every pair of regions that share at least one pixel, the size
of their intersection; all region-based metrics are functions of this
structure alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidClassError, InvalidPairingError

_STRUCTURE = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool),
    8: np.ones((3, 3), dtype=bool),
}


def binarize_class(label_map, class_id):
    """Binary mask of one class: 1 where the map holds class_id, else 0.

    Ignore and unknown pixels never equal a real class id, so they always
    land in the zero side of the mask.
    """
    if not 0 <= int(class_id) < label_map.num_classes:
        raise InvalidClassError(
            f"class {class_id} outside 0..{label_map.num_classes - 1}"
        )
    return (label_map.data == int(class_id)).astype(np.uint8)


@dataclass(frozen=True)
class Region:
    """One connected region: its class, stable id, and member pixels."""

    class_id: int
    region_id: int
    pixel_count: int
    pixels: np.ndarray  # (n, 2) array of (row, col), row-major sorted

    def __post_init__(self):
        assert self.pixel_count == len(self.pixels)
        assert self.pixel_count > 0, "regions are never empty"


class RegionSet:
    """Connected regions of a single class.

    ``labels`` holds 0 for pixels outside the class and ``region_id + 1``
    inside; ``areas[i]`` is the pixel count of region i. Ids run 0..count-1
    in order of each region's first row-major pixel.
    """

    __slots__ = ("class_id", "labels", "areas")

    def __init__(self, class_id, labels, areas):
        self.class_id = int(class_id)
        self.labels = labels
        self.areas = areas

    @property
    def region_count(self):
        return len(self.areas)

    @property
    def shape(self):
        return self.labels.shape

    def region(self, region_id):
        if not 0 <= region_id < self.region_count:
            raise InvalidClassError(
                f"region {region_id} outside 0..{self.region_count - 1}"
            )
        pixels = np.argwhere(self.labels == region_id + 1)
        return Region(self.class_id, region_id, len(pixels), pixels)

    def regions(self):
        return [self.region(i) for i in range(self.region_count)]

    def mask(self, region_id):
        return self.labels == region_id + 1


def connected_components(mask, connectivity=8, *, class_id=0):
    """Label the 1-pixels of a binary mask into connected regions.

    Args:
        mask: 2-D array; nonzero means member.
        connectivity: 4 for edge-adjacency, 8 to include diagonals.
        class_id: class recorded on the resulting RegionSet.
    """
    if connectivity not in _STRUCTURE:
        raise InvalidClassError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise InvalidClassError(f"mask must be 2-D, got shape {mask.shape}")
    raw, count = ndimage.label(mask != 0, structure=_STRUCTURE[connectivity])
    if count == 0:
        labels = np.zeros(mask.shape, dtype=np.int32)
        labels.setflags(write=False)
        return RegionSet(class_id, labels, np.zeros(0, dtype=np.int64))
    # Relabel so ids follow first-pixel order; the library's own numbering
    # is an implementation detail we must not leak.
    flat = raw.ravel()
    ids, first = np.unique(flat, return_index=True)
    keep = ids != 0
    ids, first = ids[keep], first[keep]
    order = np.argsort(first, kind="stable")
    lut = np.zeros(count + 1, dtype=np.int32)
    lut[ids[order]] = np.arange(1, count + 1, dtype=np.int32)
    labels = lut[raw]
    areas = np.bincount(labels.ravel(), minlength=count + 1)[1:].astype(np.int64)
    assert (areas > 0).all()
    labels.setflags(write=False)
    return RegionSet(class_id, labels, areas)


def extract_regions(label_map, class_id, connectivity=8):
    """Binarize one class of a label map and label its regions."""
    return connected_components(
        binarize_class(label_map, class_id), connectivity, class_id=class_id
    )


class OverlapGraph:
    """Bipartite intersection structure between gt and predicted regions.

    Edges are kept in three parallel arrays sorted by (gt id, pred id);
    ``edge_count[i]`` is the number of shared pixels, always positive.
    """

    __slots__ = (
        "class_id",
        "gt_areas",
        "pred_areas",
        "edge_gt",
        "edge_pred",
        "edge_pixels",
    )

    def __init__(self, class_id, gt_areas, pred_areas, edges=()):
        self.class_id = int(class_id)
        self.gt_areas = np.asarray(gt_areas, dtype=np.int64)
        self.pred_areas = np.asarray(pred_areas, dtype=np.int64)
        edges = sorted((int(g), int(s), int(c)) for g, s, c in edges)
        self.edge_gt = np.array([e[0] for e in edges], dtype=np.int64)
        self.edge_pred = np.array([e[1] for e in edges], dtype=np.int64)
        self.edge_pixels = np.array([e[2] for e in edges], dtype=np.int64)
        self._validate()

    def _validate(self):
        n, m = self.gt_count, self.pred_count
        assert (self.gt_areas > 0).all() and (self.pred_areas > 0).all()
        if len(self.edge_gt):
            assert self.edge_gt.min() >= 0 and self.edge_gt.max() < n
            assert self.edge_pred.min() >= 0 and self.edge_pred.max() < m
            assert (self.edge_pixels > 0).all(), "edges must share pixels"
            pair = self.edge_gt * max(m, 1) + self.edge_pred
            assert len(np.unique(pair)) == len(pair), "duplicate edge"
            per_gt = np.bincount(self.edge_gt, weights=self.edge_pixels, minlength=n)
            assert (per_gt <= self.gt_areas).all(), "overlap exceeds gt area"
            per_pred = np.bincount(self.edge_pred, weights=self.edge_pixels, minlength=m)
            assert (per_pred <= self.pred_areas).all(), "overlap exceeds pred area"

    @property
    def gt_count(self):
        return len(self.gt_areas)

    @property
    def pred_count(self):
        return len(self.pred_areas)

    @property
    def edges(self):
        """Edges as (gt id, pred id, shared pixels), sorted."""
        return list(zip(self.edge_gt.tolist(), self.edge_pred.tolist(), self.edge_pixels.tolist()))

    def gt_degrees(self):
        """Number of predictions overlapping each gt region."""
        return np.bincount(self.edge_gt, minlength=self.gt_count).astype(np.int64)

    def pred_degrees(self):
        """Number of gt regions overlapping each prediction."""
        return np.bincount(self.edge_pred, minlength=self.pred_count).astype(np.int64)

    def transpose(self):
        """Same graph with the gt and prediction roles swapped."""
        return OverlapGraph(
            self.class_id,
            self.pred_areas,
            self.gt_areas,
            zip(self.edge_pred.tolist(), self.edge_gt.tolist(), self.edge_pixels.tolist()),
        )

    def __eq__(self, other):
        if not isinstance(other, OverlapGraph):
            return NotImplemented
        return (
            self.class_id == other.class_id
            and np.array_equal(self.gt_areas, other.gt_areas)
            and np.array_equal(self.pred_areas, other.pred_areas)
            and np.array_equal(self.edge_gt, other.edge_gt)
            and np.array_equal(self.edge_pred, other.edge_pred)
            and np.array_equal(self.edge_pixels, other.edge_pixels)
        )

    def __repr__(self):
        return (
            f"OverlapGraph(class={self.class_id}, gt={self.gt_count}, "
            f"pred={self.pred_count}, edges={len(self.edge_gt)})"
        )


def build_overlap_graph(gt_regions, pred_regions):
    """Overlap graph between two region sets of the same class and canvas."""
    if gt_regions.class_id != pred_regions.class_id:
        raise InvalidPairingError(
            f"region sets describe classes {gt_regions.class_id} and "
            f"{pred_regions.class_id}"
        )
    if gt_regions.shape != pred_regions.shape:
        raise InvalidPairingError(
            f"region sets cover different canvases: {gt_regions.shape} vs "
            f"{pred_regions.shape}"
        )
    g = gt_regions.labels.ravel()
    s = pred_regions.labels.ravel()
    both = (g > 0) & (s > 0)
    m = pred_regions.region_count
    # 64-bit pair keys; counting via bincount over N*M buckets could blow up
    # on pathological region counts, unique() stays proportional to overlap.
    keys = g[both].astype(np.int64) * (m + 1) + s[both].astype(np.int64)
    uniq, counts = np.unique(keys, return_counts=True)
    edges = zip(
        (uniq // (m + 1) - 1).tolist(),
        (uniq % (m + 1) - 1).tolist(),
        counts.tolist(),
    )
    return OverlapGraph(
        gt_regions.class_id, gt_regions.areas, pred_regions.areas, edges
    )
