"""Agreement checks between the fast evaluator and the reference one.

Counts must match exactly; floating-point values must agree to 1e-12,
which leaves room for the two implementations to order their arithmetic
differently while catching any real formula divergence.
"""

from __future__ import annotations

from ..harness import EvalConfig, evaluate_pair
from .oracle import oracle_record
from .random_maps import random_map_pair

FLOAT_TOL = 1e-12

_INT_FIELDS = (
    "gt_regions",
    "pred_regions",
    "gt_split",
    "pred_contributing",
    "pred_merging",
    "gt_merged",
    "over_excess",
    "under_excess",
)
_FLOAT_FIELDS = (
    "over_ratio",
    "under_ratio",
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


def _compare_value(label, fast, slow, problems):
    if (fast is None) != (slow is None):
        problems.append(f"{label}: {fast!r} vs reference {slow!r}")
    elif fast is not None and abs(fast - slow) > FLOAT_TOL:
        problems.append(f"{label}: {fast!r} vs reference {slow!r}")


def compare_records(fast, slow):
    """All disagreements between two ImageRecords, as human-readable lines."""
    problems = []
    _compare_value("pixel_error", fast.pixel_error, slow.pixel_error, problems)
    if sorted(fast.classes) != sorted(slow.classes):
        problems.append(
            f"class sets differ: {sorted(fast.classes)} vs {sorted(slow.classes)}"
        )
        return problems
    for k in sorted(fast.classes):
        a, b = fast.classes[k], slow.classes[k]
        prefix = f"class {k}"
        if a.applicable != b.applicable:
            problems.append(f"{prefix} applicable: {a.applicable} vs {b.applicable}")
            continue
        for name in _INT_FIELDS:
            if getattr(a, name) != getattr(b, name):
                problems.append(
                    f"{prefix} {name}: {getattr(a, name)} vs reference {getattr(b, name)}"
                )
        for name in _FLOAT_FIELDS:
            _compare_value(
                f"{prefix} {name}", getattr(a, name), getattr(b, name), problems
            )
        if (a.ap_errors is None) != (b.ap_errors is None):
            problems.append(f"{prefix} ap_errors presence differs")
        elif a.ap_errors is not None:
            if sorted(a.ap_errors) != sorted(b.ap_errors):
                problems.append(f"{prefix} ap threshold sets differ")
            else:
                for t in sorted(a.ap_errors):
                    _compare_value(
                        f"{prefix} ap_errors[{t}]", a.ap_errors[t], b.ap_errors[t], problems
                    )
                if a.ap_counts != b.ap_counts:
                    problems.append(
                        f"{prefix} ap_counts: {a.ap_counts} vs reference {b.ap_counts}"
                    )
        if a.pq_counts != b.pq_counts:
            problems.append(
                f"{prefix} pq_counts: {a.pq_counts} vs reference {b.pq_counts}"
            )
    return problems


def check_pair(gt, pred, config, *, image_id="pair"):
    """Disagreement lines for one pair (empty list means agreement)."""
    fast = evaluate_pair(gt, pred, None, config, image_id=image_id)
    slow = oracle_record(gt, pred, config, image_id=image_id)
    return compare_records(fast, slow)


def run_crosscheck(seeds=200, *, config=None, height=48, width=48, num_classes=4):
    """Compare the evaluators over a stream of random map pairs.

    Returns a list of "seed N: problem" lines; empty means every pair
    agreed. Each seed is checked under both connectivities.
    """
    if config is None:
        config = EvalConfig(num_classes=num_classes)
    failures = []
    for seed in range(seeds):
        gt, pred = random_map_pair(
            seed,
            height=height,
            width=width,
            num_classes=config.num_classes,
            background_id=config.background_id,
            ignore_id=config.ignore_id,
        )
        for connectivity in (4, 8):
            cfg = EvalConfig(
                num_classes=config.num_classes,
                background_id=config.background_id,
                ignore_id=config.ignore_id,
                connectivity=connectivity,
                metrics=config.metrics,
                ap_thresholds=config.ap_thresholds,
            )
            for line in check_pair(gt, pred, cfg, image_id=f"seed-{seed}"):
                failures.append(f"seed {seed} (connectivity {connectivity}): {line}")
    return failures
