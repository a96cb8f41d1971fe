"""Batch evaluation: per-image records, dataset aggregation, sweeps.

Images are independent, so datasets are evaluated by a thread pool sized
from the SEGMETRICS_THREADS environment variable (default: CPU count,
capped at 8). Results are collected in filename order and reduced
sequentially, which makes reports byte-identical for any worker count.

Aggregation: a class's dataset value is the mean over images where the
class is applicable (present in either map) and the metric is defined;
overall values are unweighted means over classes with at least one
applicable image. Pixel error aggregates over images directly.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .baselines import (
    AP_THRESHOLDS,
    average_precision_errors,
    dice_error,
    global_consistency_error,
    iou_error,
    panoptic_quality_error,
    persello_errors,
    pixel_error,
    pixel_stats,
)
from .errors import InvalidClassError, InvalidPairingError, PairingError
from .io import load_confidence_map, load_label_map
from .maps import DEFAULT_IGNORE_ID, check_paired, check_same_canvas
from .regions import build_overlap_graph, extract_regions
from .region_metrics import (
    apply_confidence_threshold,
    region_confidences,
    rom,
    rum,
)
from .report import (
    CLASS_METRIC_FIELDS,
    ClassRecord,
    ImageRecord,
    MetricReport,
    SweepPoint,
    SweepResult,
)

METRIC_KEYS = ("rom", "rum", "iou", "dice", "pixel", "gce", "pe", "ap", "pq")

THREADS_ENV_VAR = "SEGMETRICS_THREADS"

logger = logging.getLogger("segmetrics")


@dataclass(frozen=True)
class EvalConfig:
    """Everything an evaluation run needs to know besides the data."""

    num_classes: int
    background_id: int = 0
    ignore_id: int | None = DEFAULT_IGNORE_ID
    connectivity: int = 8
    metrics: tuple = METRIC_KEYS
    confidence_threshold: float | None = None
    ap_thresholds: tuple = AP_THRESHOLDS
    input_format: str = "auto"
    unpaired: str = "fail"

    def __post_init__(self):
        if self.num_classes < 2:
            raise InvalidClassError(
                f"need at least background plus one class, got {self.num_classes}"
            )
        if not 0 <= self.background_id < self.num_classes:
            raise InvalidClassError(
                f"background id {self.background_id} outside 0..{self.num_classes - 1}"
            )
        if self.ignore_id is not None and 0 <= self.ignore_id <= self.num_classes:
            raise InvalidClassError(
                f"ignore id {self.ignore_id} collides with class ids"
            )
        if self.connectivity not in (4, 8):
            raise InvalidClassError(f"connectivity must be 4 or 8, got {self.connectivity}")
        metrics = tuple(self.metrics)
        if not metrics:
            raise InvalidClassError("at least one metric must be selected")
        unknown = [m for m in metrics if m not in METRIC_KEYS]
        if unknown:
            raise InvalidClassError(f"unknown metrics {unknown}; choose from {METRIC_KEYS}")
        object.__setattr__(self, "metrics", metrics)
        if self.confidence_threshold is not None and not (
            0.0 <= self.confidence_threshold <= 1.0
        ):
            raise InvalidClassError(
                f"confidence threshold {self.confidence_threshold} outside [0, 1]"
            )
        thresholds = tuple(float(t) for t in self.ap_thresholds)
        if not thresholds or any(
            not 0.0 <= t <= 1.0 for t in thresholds
        ) or list(thresholds) != sorted(set(thresholds)):
            raise InvalidClassError(
                "AP thresholds must be a strictly increasing sequence in [0, 1]"
            )
        object.__setattr__(self, "ap_thresholds", thresholds)
        if self.input_format not in ("auto", "png", "bin"):
            raise InvalidClassError(f"input format must be auto/png/bin, got {self.input_format}")
        if self.unpaired not in ("fail", "skip"):
            raise InvalidClassError(f"unpaired policy must be fail or skip, got {self.unpaired}")

    def foreground_classes(self):
        return [k for k in range(self.num_classes) if k != self.background_id]

    def echo(self):
        """Exact settings echoed into every report."""
        return {
            "num_classes": self.num_classes,
            "background_id": self.background_id,
            "ignore_id": self.ignore_id,
            "connectivity": self.connectivity,
            "metrics": list(self.metrics),
            "confidence_threshold": self.confidence_threshold,
            "ap_thresholds": list(self.ap_thresholds),
            "input_format": self.input_format,
            "unpaired": self.unpaired,
            "aggregation": "image-mean-per-class-then-class-mean",
        }


def _check_config_pairing(label_map, config, role):
    if label_map.num_classes != config.num_classes:
        raise InvalidPairingError(
            f"{role} declares {label_map.num_classes} classes, config {config.num_classes}"
        )
    if label_map.ignore_id != config.ignore_id:
        raise InvalidPairingError(
            f"{role} ignore id {label_map.ignore_id} differs from config {config.ignore_id}"
        )


def evaluate_pair(gt, pred, confidence=None, config=None, *, image_id="pair"):
    """Evaluate one gt/prediction pair into an ImageRecord.

    When the config carries a confidence threshold, the prediction is
    filtered first; when a confidence map is supplied, predicted regions
    are also ranked by mean confidence in the precision metric instead of
    by area.
    """
    if config is None:
        raise InvalidPairingError("an EvalConfig is required")
    check_paired(gt, pred)
    _check_config_pairing(gt, config, "gt")
    _check_config_pairing(pred, config, "prediction")
    if config.confidence_threshold is not None:
        if confidence is None:
            raise InvalidPairingError(
                "config sets a confidence threshold but no confidence map was given"
            )
        pred = apply_confidence_threshold(
            pred,
            confidence,
            config.confidence_threshold,
            config.connectivity,
            background_id=config.background_id,
        )
    elif confidence is not None:
        check_same_canvas(pred, confidence, "prediction and confidence")

    selected = set(config.metrics)
    fg = config.foreground_classes()
    record = ImageRecord(image_id=image_id)

    stats = pixel_stats(gt, pred, fg) if selected & {"iou", "dice"} else None
    iou_per_class = iou_error(stats)[0] if "iou" in selected else None
    dice_per_class = dice_error(stats)[0] if "dice" in selected else None
    gce_per_class = (
        global_consistency_error(gt, pred, background_id=config.background_id)[0]
        if "gce" in selected
        else None
    )
    if "pixel" in selected:
        record.pixel_error = pixel_error(gt, pred)

    for k in fg:
        gt_regions = extract_regions(gt, k, config.connectivity)
        pred_regions = extract_regions(pred, k, config.connectivity)
        n, m = gt_regions.region_count, pred_regions.region_count
        cr = ClassRecord(class_id=k, applicable=n > 0 or m > 0)
        record.classes[k] = cr
        if not cr.applicable:
            continue
        graph = build_overlap_graph(gt_regions, pred_regions)
        over = rom(graph)
        under = rum(graph)
        cr.gt_regions = n
        cr.pred_regions = m
        cr.gt_split = len(over.gt_ids)
        cr.pred_contributing = len(over.pred_ids)
        cr.pred_merging = len(under.pred_ids)
        cr.gt_merged = len(under.gt_ids)
        cr.over_excess = over.excess
        cr.under_excess = under.excess
        cr.over_ratio = over.ratio
        cr.under_ratio = under.ratio
        if "rom" in selected:
            cr.rom = over.value
        if "rum" in selected:
            cr.rum = under.value
        if iou_per_class is not None:
            cr.iou_error = iou_per_class[k]
        if dice_per_class is not None:
            cr.dice_error = dice_per_class[k]
        if gce_per_class is not None:
            cr.gce = gce_per_class[k]
        if "pe" in selected:
            cr.pe_os, cr.pe_us = persello_errors(graph)
        if "ap" in selected:
            conf_rank = None
            if confidence is not None:
                conf_rank = [
                    rc.mean_confidence
                    for rc in region_confidences(pred_regions, confidence)
                ]
            errors, mean, details = average_precision_errors(
                graph, config.ap_thresholds, conf_rank
            )
            cr.ap_errors = errors
            cr.ap_error = mean
            cr.ap_counts = {
                t: (d.tp, d.fp, d.fn) for t, d in details.items()
            }
        if "pq" in selected:
            value, detail = panoptic_quality_error(graph)
            cr.pq_error = value
            cr.pq_counts = (detail.tp, detail.fp, detail.fn)
    return record


@dataclass(frozen=True)
class PairedFiles:
    """One dataset item: matching gt/prediction (and confidence) files."""

    stem: str
    gt_path: str
    pred_path: str
    conf_path: str | None = None


def _stem_index(directory, what):
    directory = Path(directory)
    if not directory.is_dir():
        raise PairingError(f"{what} directory {directory} does not exist")
    index = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file():
            continue
        if path.stem in index:
            raise PairingError(
                f"{what} directory has multiple files named {path.stem!r}"
            )
        index[path.stem] = path
    return index


def pair_directories(gt_dir, pred_dir, conf_dir=None, *, manifest=None, unpaired="fail"):
    """Pair files across directories by filename stem.

    A manifest (text file, one stem per line, # comments allowed) pins the
    exact set; every listed stem must resolve. Without one, the stem union
    is used and mismatches either fail or are skipped per the policy.
    """
    gt_index = _stem_index(gt_dir, "gt")
    pred_index = _stem_index(pred_dir, "prediction")
    conf_index = _stem_index(conf_dir, "confidence") if conf_dir else None

    if manifest is not None:
        stems = []
        for raw in Path(manifest).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                stems.append(line)
        missing = [
            s
            for s in stems
            if s not in gt_index
            or s not in pred_index
            or (conf_index is not None and s not in conf_index)
        ]
        if missing:
            raise PairingError(f"manifest entries not found in every directory: {missing}")
    else:
        stems = sorted(set(gt_index) | set(pred_index))
        complete = [
            s
            for s in stems
            if s in gt_index
            and s in pred_index
            and (conf_index is None or s in conf_index)
        ]
        if len(complete) != len(stems):
            dangling = sorted(set(stems) - set(complete))
            if unpaired == "fail":
                raise PairingError(
                    f"unpaired stems {dangling}; rerun with the skip policy to drop them"
                )
            logger.warning("skipping %d unpaired stem(s): %s", len(dangling), dangling)
            stems = complete
    if not stems:
        raise PairingError("no gt/prediction pairs to evaluate")
    return [
        PairedFiles(
            s,
            str(gt_index[s]),
            str(pred_index[s]),
            str(conf_index[s]) if conf_index is not None else None,
        )
        for s in sorted(stems)
    ]


def worker_count(item_count):
    """Worker pool size: SEGMETRICS_THREADS, else min(cpu, 8)."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is not None:
        try:
            workers = int(raw)
        except ValueError:
            raise InvalidClassError(f"{THREADS_ENV_VAR}={raw!r} is not an integer")
        if workers < 1:
            raise InvalidClassError(f"{THREADS_ENV_VAR} must be >= 1, got {workers}")
    else:
        workers = min(os.cpu_count() or 1, 8)
    return max(1, min(workers, item_count))


def _evaluate_item(item, config):
    if isinstance(item, PairedFiles):
        gt = load_label_map(
            item.gt_path, config.num_classes, config.ignore_id, fmt=config.input_format
        )
        pred = load_label_map(
            item.pred_path, config.num_classes, config.ignore_id, fmt=config.input_format
        )
        conf = (
            load_confidence_map(item.conf_path, fmt=config.input_format)
            if item.conf_path
            else None
        )
        stem = item.stem
    else:
        stem, gt, pred, *rest = item
        conf = rest[0] if rest else None
    return evaluate_pair(gt, pred, conf, config, image_id=stem)


def _item_stem(item):
    return item.stem if isinstance(item, PairedFiles) else item[0]


def aggregate_records(records, config):
    """Dataset aggregates from per-image records; see module docstring."""
    per_class = {}
    for k in config.foreground_classes():
        class_records = [r.classes[k] for r in records if k in r.classes]
        applicable = [cr for cr in class_records if cr.applicable]
        if not applicable:
            continue
        entry = {"images": len(applicable)}
        for field_name in CLASS_METRIC_FIELDS:
            values = [
                getattr(cr, field_name)
                for cr in applicable
                if getattr(cr, field_name) is not None
            ]
            entry[field_name] = math.fsum(values) / len(values) if values else None
        per_class[k] = entry
    overall = {}
    for field_name in CLASS_METRIC_FIELDS:
        values = [
            per_class[k][field_name]
            for k in sorted(per_class)
            if per_class[k][field_name] is not None
        ]
        overall[field_name] = math.fsum(values) / len(values) if values else None
    pixel_values = [r.pixel_error for r in records if r.pixel_error is not None]
    overall["pixel_error"] = (
        math.fsum(pixel_values) / len(pixel_values) if pixel_values else None
    )
    return per_class, overall


def evaluate_dataset(items, config):
    """Evaluate every item (PairedFiles or in-memory tuples) into a report.

    In-memory items are (image_id, gt, pred) or (image_id, gt, pred, conf)
    tuples. Items are processed in image-id order whatever the pool does.
    """
    items = sorted(items, key=_item_stem)
    if not items:
        raise PairingError("no gt/prediction pairs to evaluate")
    workers = worker_count(len(items))
    if workers == 1:
        records = [_evaluate_item(item, config) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda it: _evaluate_item(it, config), items))
    per_class, overall = aggregate_records(records, config)
    return MetricReport(
        config=config.echo(),
        images=records,
        per_class=per_class,
        overall=overall,
    )


def sweep_confidence(items, thresholds, config):
    """One full dataset evaluation per confidence threshold.

    Every item must carry a confidence map; thresholds must be strictly
    increasing. Points record the overall region measures, the pixel-wise
    error means, and the total surviving predicted-region count, which is
    non-increasing along the sweep.
    """
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise InvalidClassError("sweep needs at least one threshold")
    if thresholds != sorted(set(thresholds)) or any(
        not 0.0 <= t <= 1.0 for t in thresholds
    ):
        raise InvalidClassError("sweep thresholds must be strictly increasing in [0, 1]")
    items = sorted(items, key=_item_stem)
    for item in items:
        has_conf = (
            item.conf_path is not None
            if isinstance(item, PairedFiles)
            else len(item) > 3 and item[3] is not None
        )
        if not has_conf:
            raise PairingError(
                f"sweep requires a confidence map for every image; {_item_stem(item)} has none"
            )
    points = []
    for threshold in thresholds:
        report = evaluate_dataset(
            items, replace(config, confidence_threshold=threshold)
        )
        total_pred = sum(
            cr.pred_regions for r in report.images for cr in r.classes.values()
        )
        points.append(
            SweepPoint(
                threshold=threshold,
                rom=report.overall.get("rom"),
                rum=report.overall.get("rum"),
                pixel_error=report.overall.get("pixel_error"),
                iou_error=report.overall.get("iou_error"),
                dice_error=report.overall.get("dice_error"),
                pred_regions=total_pred,
            )
        )
    sweep_config = config.echo()
    sweep_config["confidence_threshold"] = None
    sweep_config["sweep_thresholds"] = list(thresholds)
    return SweepResult(config=sweep_config, points=points)
