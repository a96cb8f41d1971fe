"""Command line front end.

Three subcommands: ``eval`` runs a dataset evaluation (optionally a
confidence-threshold sweep) and writes a JSON or CSV report, ``panels``
materializes the canonical example panels as image files, and ``check``
fuzzes the fast evaluator against the slow reference one.

Exit codes: 0 success, 1 usage error, 2 data or gating error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from importlib import resources
from pathlib import Path

from .errors import SegmetricsError
from .harness import (
    METRIC_KEYS,
    EvalConfig,
    evaluate_dataset,
    pair_directories,
    sweep_confidence,
)
from .io import save_label_map
from .report import SweepResult, emit_report, serialize
from .synthetic import canonical_panels, panel_pair, run_crosscheck

# fail-above accepts both the selection keys and the report field names.
_GATE_KEYS = {
    "rom": "rom",
    "rum": "rum",
    "gce": "gce",
    "iou": "iou_error",
    "iou_error": "iou_error",
    "dice": "dice_error",
    "dice_error": "dice_error",
    "pixel": "pixel_error",
    "pixel_error": "pixel_error",
    "ap": "ap_error",
    "ap_error": "ap_error",
    "pq": "pq_error",
    "pq_error": "pq_error",
    "pe_os": "pe_os",
    "pe_us": "pe_us",
}

_SWEEP_GATE_FIELDS = ("rom", "rum", "pixel_error", "iou_error", "dice_error")

# Every eval option that a config file may set, in CLI spelling.
_EVAL_KEYS = (
    "gt",
    "pred",
    "conf",
    "classes",
    "background",
    "ignore",
    "connectivity",
    "metrics",
    "threshold",
    "sweep",
    "format",
    "out",
    "input_format",
    "manifest",
    "unpaired",
    "fail_above",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="segmetrics", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    ev = sub.add_parser(
        "eval",
        help="evaluate a prediction directory against ground truth",
        description="Pair files by name stem, evaluate every pair, write a report.",
    )
    ev.add_argument("--gt", metavar="DIR", help="ground-truth label map directory")
    ev.add_argument("--pred", metavar="DIR", help="prediction label map directory")
    ev.add_argument("--conf", metavar="DIR", help="confidence map directory")
    ev.add_argument("--classes", metavar="K", help="number of classes including background")
    ev.add_argument("--background", metavar="ID", help="background class id (default 0)")
    ev.add_argument("--ignore", metavar="ID", help="ignore label id, or 'none' (default 255)")
    ev.add_argument("--connectivity", metavar="4|8", help="region connectivity (default 8)")
    ev.add_argument(
        "--metrics",
        metavar="LIST",
        help=f"comma-separated subset of {','.join(METRIC_KEYS)} (default all)",
    )
    ev.add_argument("--threshold", metavar="T", help="confidence threshold in [0, 1]")
    ev.add_argument("--sweep", metavar="A:B:STEP", help="confidence threshold sweep, inclusive")
    ev.add_argument("--format", metavar="json|csv", help="report format (default json)")
    ev.add_argument("--out", metavar="PATH", help="report destination, or '-' for stdout")
    ev.add_argument(
        "--input-format",
        dest="input_format",
        metavar="auto|png|bin",
        help="force the label/confidence file format (default auto by extension)",
    )
    ev.add_argument("--manifest", metavar="PATH", help="file of stems to evaluate, one per line")
    ev.add_argument("--unpaired", metavar="fail|skip", help="policy for unpaired files (default fail)")
    ev.add_argument(
        "--fail-above",
        dest="fail_above",
        metavar="METRIC=V",
        action="append",
        help="exit 2 if a final metric exceeds V; repeatable",
    )
    ev.add_argument("--config", metavar="PATH", help="key=value file supplying any flag above")

    pa = sub.add_parser(
        "panels",
        help="write the canonical example panels as image pairs",
        description="Materialize the frozen panels under OUT/gt and OUT/pred.",
    )
    pa.add_argument("--out", metavar="DIR", required=True, help="output directory")
    pa.add_argument(
        "--format",
        choices=("png", "bin"),
        default="png",
        help="label map file format (default png)",
    )

    ck = sub.add_parser(
        "check",
        help="fuzz the evaluator against the slow reference implementation",
        description="Evaluate random map pairs with both implementations and compare.",
    )
    ck.add_argument("--seeds", type=int, default=200, metavar="N", help="seed count (default 200)")
    return parser


def _read_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read config file {path}: {exc}")
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if key == "config":
            raise _UsageError(f"{path}:{lineno}: config files cannot include each other")
        if key not in _EVAL_KEYS:
            raise _UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _to_int(name, value):
    try:
        return int(value)
    except ValueError:
        raise _UsageError(f"--{name.replace('_', '-')} expects an integer, got {value!r}")


def _to_float(name, value):
    try:
        return float(value)
    except ValueError:
        raise _UsageError(f"--{name.replace('_', '-')} expects a number, got {value!r}")


def _parse_sweep(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"--sweep expects A:B:STEP, got {text!r}")
    a, b, step = (_to_float("sweep", p) for p in parts)
    if step <= 0:
        raise _UsageError(f"--sweep step must be positive, got {step}")
    if not (0.0 <= a <= b <= 1.0):
        raise _UsageError(f"--sweep range must satisfy 0 <= A <= B <= 1, got {a}..{b}")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    # Rounding keeps 0.1-style steps exact instead of drifting by ulps.
    return [round(a + i * step, 12) for i in range(count)]


def _parse_gates(entries):
    gates = []
    for entry in entries:
        if "=" not in entry:
            raise _UsageError(f"--fail-above expects METRIC=VALUE, got {entry!r}")
        name, raw = entry.split("=", 1)
        name = name.strip().lower()
        if name == "pe":
            raise _UsageError("--fail-above: 'pe' is two metrics; use pe_os or pe_us")
        if name not in _GATE_KEYS:
            raise _UsageError(
                f"--fail-above: unknown metric {name!r}; choose from {sorted(set(_GATE_KEYS))}"
            )
        gates.append((_GATE_KEYS[name], _to_float("fail_above", raw)))
    return gates


def _merge_eval_settings(args):
    file_values = _read_config_file(args.config) if args.config else {}
    if args.threshold is not None or args.sweep is not None:
        file_values.pop("threshold", None)
        file_values.pop("sweep", None)
    merged = {}
    for key in _EVAL_KEYS:
        if key == "fail_above":
            entries = []
            if file_values.get(key):
                entries += [s.strip() for s in file_values[key].split(",") if s.strip()]
            entries += args.fail_above or []
            merged[key] = entries
        else:
            cli = getattr(args, key)
            merged[key] = cli if cli is not None else file_values.get(key)
    return merged


def _cmd_eval(args):
    s = _merge_eval_settings(args)
    for required in ("gt", "pred", "classes", "out"):
        if not s[required]:
            raise _UsageError(f"--{required} is required")
    fmt = s["format"] or "json"
    if fmt not in ("json", "csv"):
        raise _UsageError(f"--format must be json or csv, got {fmt!r}")
    threshold = _to_float("threshold", s["threshold"]) if s["threshold"] else None
    sweep = _parse_sweep(s["sweep"]) if s["sweep"] else None
    if threshold is not None and sweep is not None:
        raise _UsageError("--threshold and --sweep are mutually exclusive")
    if (threshold is not None or sweep is not None) and not s["conf"]:
        raise _UsageError("confidence filtering needs --conf")
    gates = _parse_gates(s["fail_above"])
    if sweep is not None:
        for key, _ in gates:
            if key not in _SWEEP_GATE_FIELDS:
                raise _UsageError(
                    f"--fail-above with --sweep supports {_SWEEP_GATE_FIELDS}, not {key!r}"
                )
    ignore = s["ignore"]
    if ignore is not None:
        ignore = None if ignore.lower() in ("none", "-") else _to_int("ignore", ignore)
    else:
        ignore = 255
    metrics = (
        tuple(m.strip().lower() for m in s["metrics"].split(",") if m.strip())
        if s["metrics"]
        else METRIC_KEYS
    )
    try:
        config = EvalConfig(
            num_classes=_to_int("classes", s["classes"]),
            background_id=_to_int("background", s["background"]) if s["background"] else 0,
            ignore_id=ignore,
            connectivity=_to_int("connectivity", s["connectivity"]) if s["connectivity"] else 8,
            metrics=metrics,
            confidence_threshold=threshold,
            input_format=s["input_format"] or "auto",
            unpaired=s["unpaired"] or "fail",
        )
    except SegmetricsError as exc:
        raise _UsageError(str(exc))

    items = pair_directories(
        s["gt"], s["pred"], s["conf"], manifest=s["manifest"], unpaired=config.unpaired
    )
    if sweep is not None:
        result = sweep_confidence(items, sweep, config)
    else:
        result = evaluate_dataset(items, config)

    if s["out"] == "-":
        sys.stdout.write(serialize(result, fmt))
    else:
        emit_report(result, fmt, s["out"])

    tripped = _apply_gates(result, gates)
    for line in tripped:
        print(line, file=sys.stderr)
    return 2 if tripped else 0


def _apply_gates(result, gates):
    """Gate messages for every metric over its limit (or undefined)."""
    tripped = []
    if isinstance(result, SweepResult):
        for key, limit in gates:
            for point in result.points:
                value = getattr(point, key)
                if value is None:
                    tripped.append(
                        f"fail-above: {key} undefined at threshold {point.threshold}"
                    )
                elif value > limit:
                    tripped.append(
                        f"fail-above: {key} = {value!r} > {limit!r} "
                        f"at threshold {point.threshold}"
                    )
        return tripped
    for key, limit in gates:
        value = result.overall.get(key)
        if value is None:
            tripped.append(f"fail-above: {key} is undefined on this dataset")
        elif value > limit:
            tripped.append(f"fail-above: {key} = {value!r} > {limit!r}")
    return tripped


def _cmd_panels(args):
    out = Path(args.out)
    ext = ".png" if args.format == "png" else ".bin"
    (out / "gt").mkdir(parents=True, exist_ok=True)
    (out / "pred").mkdir(parents=True, exist_ok=True)
    names = sorted(canonical_panels())
    for name in names:
        gt, pred = panel_pair(name)
        save_label_map(gt, out / "gt" / f"{name}{ext}")
        save_label_map(pred, out / "pred" / f"{name}{ext}")
    table = resources.files("segmetrics.synthetic").joinpath("panel_layouts.txt")
    (out / "panel_layouts.txt").write_text(table.read_text())
    print(f"wrote {len(names)} panel pairs under {out} (2 classes, background 0)")
    return 0


def _cmd_check(args):
    if args.seeds < 1:
        raise _UsageError(f"--seeds must be >= 1, got {args.seeds}")
    failures = run_crosscheck(args.seeds)
    if failures:
        shown = failures[:20]
        for line in shown:
            print(f"disagreement: {line}", file=sys.stderr)
        if len(failures) > len(shown):
            print(f"... and {len(failures) - len(shown)} more", file=sys.stderr)
        print(f"check failed: {len(failures)} disagreement(s)", file=sys.stderr)
        return 3
    print(f"checked {args.seeds} seeds under both connectivities: implementations agree")
    return 0


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "panels":
            return _cmd_panels(args)
        if args.command == "check":
            return _cmd_check(args)
        raise _UsageError("a command is required (eval, panels, or check)")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SegmetricsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError:
        print("internal invariant violated; this is a bug", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
