"""Report structures and their JSON/CSV serialization.

Records are plain dataclasses. Serialization is fully deterministic: images
sort by id, classes by class id, JSON keys lexically, and floats use their
shortest round-trip repr (17 significant digits when needed), so two runs
over the same inputs emit byte-identical files regardless of thread count.

Per-class reports always carry the structural region counts (region totals,
how many regions sit in an over- or under-segmenting role, and the excess
counts), so every reported measure can be recomputed from its own record.
Metric fields that were not selected, or that are undefined for a class,
hold null.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from ._version import __version__

SCHEMA_VERSION = "1"

# Per-class metric fields that aggregate by plain means.
CLASS_METRIC_FIELDS = (
    "rom",
    "rum",
    "iou_error",
    "dice_error",
    "gce",
    "pe_os",
    "pe_us",
    "ap_error",
    "pq_error",
)

_CSV_COLUMNS = (
    "record",
    "image_id",
    "class_id",
    "applicable",
    "images",
    "gt_regions",
    "pred_regions",
    "gt_split",
    "pred_contributing",
    "pred_merging",
    "gt_merged",
    "over_excess",
    "under_excess",
    "over_ratio",
    "under_ratio",
    *CLASS_METRIC_FIELDS,
    "pixel_error",
    "threshold",
    "extra",
)


@dataclass
class ClassRecord:
    """Everything measured for one class of one image."""

    class_id: int
    applicable: bool = False
    gt_regions: int = 0
    pred_regions: int = 0
    gt_split: int = 0
    pred_contributing: int = 0
    pred_merging: int = 0
    gt_merged: int = 0
    over_excess: int = 0
    under_excess: int = 0
    over_ratio: float | None = None
    under_ratio: float | None = None
    rom: float | None = None
    rum: float | None = None
    iou_error: float | None = None
    dice_error: float | None = None
    gce: float | None = None
    pe_os: float | None = None
    pe_us: float | None = None
    ap_errors: dict | None = None  # iou threshold -> error
    ap_counts: dict | None = None  # iou threshold -> (tp, fp, fn)
    ap_error: float | None = None
    pq_error: float | None = None
    pq_counts: tuple | None = None  # (tp, fp, fn)


@dataclass
class ImageRecord:
    """Per-image evaluation result: per-class records plus pixel error."""

    image_id: str
    classes: dict = field(default_factory=dict)  # class id -> ClassRecord
    pixel_error: float | None = None


@dataclass
class MetricReport:
    """Dataset-level report: per-image detail plus aggregates."""

    config: dict
    images: list = field(default_factory=list)  # ImageRecord, sorted by id
    per_class: dict = field(default_factory=dict)  # class id -> aggregate dict
    overall: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION
    tool: dict = field(
        default_factory=lambda: {"name": "segmetrics", "version": __version__}
    )


@dataclass
class SweepPoint:
    """Dataset means after filtering at one confidence threshold."""

    threshold: float
    rom: float | None
    rum: float | None
    pixel_error: float | None
    iou_error: float | None
    dice_error: float | None
    pred_regions: int


@dataclass
class SweepResult:
    """One SweepPoint per threshold, thresholds strictly increasing."""

    config: dict
    points: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION
    tool: dict = field(
        default_factory=lambda: {"name": "segmetrics", "version": __version__}
    )


def _thresholded(mapping, transform=lambda v: v):
    if mapping is None:
        return None
    return {str(t): transform(v) for t, v in sorted(mapping.items())}


def class_record_to_dict(record):
    return {
        "class_id": record.class_id,
        "applicable": record.applicable,
        "gt_regions": record.gt_regions,
        "pred_regions": record.pred_regions,
        "gt_split": record.gt_split,
        "pred_contributing": record.pred_contributing,
        "pred_merging": record.pred_merging,
        "gt_merged": record.gt_merged,
        "over_excess": record.over_excess,
        "under_excess": record.under_excess,
        "over_ratio": record.over_ratio,
        "under_ratio": record.under_ratio,
        "rom": record.rom,
        "rum": record.rum,
        "iou_error": record.iou_error,
        "dice_error": record.dice_error,
        "gce": record.gce,
        "pe_os": record.pe_os,
        "pe_us": record.pe_us,
        "ap_errors": _thresholded(record.ap_errors),
        "ap_counts": _thresholded(record.ap_counts, list),
        "ap_error": record.ap_error,
        "pq_error": record.pq_error,
        "pq_counts": list(record.pq_counts) if record.pq_counts is not None else None,
    }


def image_record_to_dict(record):
    return {
        "image_id": record.image_id,
        "pixel_error": record.pixel_error,
        "classes": [
            class_record_to_dict(record.classes[k]) for k in sorted(record.classes)
        ],
    }


def report_to_dict(report):
    return {
        "schema_version": report.schema_version,
        "tool": dict(report.tool),
        "config": dict(report.config),
        "images": [image_record_to_dict(r) for r in report.images],
        "aggregates": {
            "per_class": [
                {"class_id": k, **report.per_class[k]} for k in sorted(report.per_class)
            ],
            "overall": dict(report.overall),
        },
    }


def sweep_to_dict(result):
    return {
        "schema_version": result.schema_version,
        "tool": dict(result.tool),
        "config": dict(result.config),
        "points": [
            {
                "threshold": p.threshold,
                "rom": p.rom,
                "rum": p.rum,
                "pixel_error": p.pixel_error,
                "iou_error": p.iou_error,
                "dice_error": p.dice_error,
                "pred_regions": p.pred_regions,
            }
            for p in result.points
        ],
    }


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_rows_report(report):
    rows = []
    for image in report.images:
        for k in sorted(image.classes):
            record = image.classes[k]
            if not record.applicable:
                continue
            row = {col: "" for col in _CSV_COLUMNS}
            row.update(
                record="class",
                image_id=image.image_id,
                class_id=k,
                applicable=1,
                pixel_error=_cell(image.pixel_error),
            )
            for name in (
                "gt_regions",
                "pred_regions",
                "gt_split",
                "pred_contributing",
                "pred_merging",
                "gt_merged",
                "over_excess",
                "under_excess",
                "over_ratio",
                "under_ratio",
                *CLASS_METRIC_FIELDS,
            ):
                row[name] = _cell(getattr(record, name))
            rows.append(row)
    for k in sorted(report.per_class):
        aggregate = report.per_class[k]
        row = {col: "" for col in _CSV_COLUMNS}
        row.update(record="class_mean", class_id=k, images=aggregate["images"])
        for name in CLASS_METRIC_FIELDS:
            row[name] = _cell(aggregate.get(name))
        rows.append(row)
    row = {col: "" for col in _CSV_COLUMNS}
    row.update(
        record="overall",
        extra=json.dumps(report.config, sort_keys=True),
        pixel_error=_cell(report.overall.get("pixel_error")),
    )
    for name in CLASS_METRIC_FIELDS:
        row[name] = _cell(report.overall.get(name))
    rows.append(row)
    return rows


def _csv_rows_sweep(result):
    rows = []
    for p in result.points:
        row = {col: "" for col in _CSV_COLUMNS}
        row.update(
            record="sweep_point",
            threshold=_cell(p.threshold),
            rom=_cell(p.rom),
            rum=_cell(p.rum),
            pixel_error=_cell(p.pixel_error),
            iou_error=_cell(p.iou_error),
            dice_error=_cell(p.dice_error),
            pred_regions=p.pred_regions,
        )
        rows.append(row)
    row = {col: "" for col in _CSV_COLUMNS}
    row.update(record="overall", extra=json.dumps(result.config, sort_keys=True))
    rows.append(row)
    return rows


def serialize_json(report_or_sweep):
    if isinstance(report_or_sweep, SweepResult):
        payload = sweep_to_dict(report_or_sweep)
    else:
        payload = report_to_dict(report_or_sweep)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def serialize_csv(report_or_sweep):
    if isinstance(report_or_sweep, SweepResult):
        rows = _csv_rows_sweep(report_or_sweep)
    else:
        rows = _csv_rows_report(report_or_sweep)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def serialize(report_or_sweep, fmt):
    """Report or sweep result as JSON or CSV text."""
    if fmt == "json":
        return serialize_json(report_or_sweep)
    if fmt == "csv":
        return serialize_csv(report_or_sweep)
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report_or_sweep, fmt, path):
    """Write a report or sweep result as JSON or CSV."""
    text = serialize(report_or_sweep, fmt)
    with open(path, "w", newline="") as handle:
        handle.write(text)


def load_report_json(path):
    """Parse an emitted JSON report back into plain dicts."""
    with open(path) as handle:
        return json.load(handle)


def load_report_csv(path):
    """Parse an emitted CSV report back into a list of row dicts."""
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))
