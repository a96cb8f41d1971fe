"""Canonical synthetic panels with known region topology.

The layouts live in ``panel_layouts.txt`` next to this module; each panel
declares its rectangles, the overlap pairs they must produce, and the
expected over-segmentation value. Generation re-derives the topology from
the painted maps and refuses to hand out a panel that does not match its
declaration, so a regression in region extraction cannot silently ship
wrong fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..errors import PanelError
from ..maps import LabelMap
from ..regions import build_overlap_graph, extract_regions
from ..region_metrics import rom

import numpy as np

PANEL_CLASS = 1
PANEL_NUM_CLASSES = 2

_LAYOUT_FILE = "panel_layouts.txt"


@dataclass(frozen=True)
class PanelSpec:
    """Declared geometry and expected topology of one panel."""

    name: str
    canvas: tuple  # (height, width)
    gt_rects: tuple  # (row, col, height, width) each
    pred_rects: tuple
    edges: tuple  # expected (gt id, pred id) overlap pairs, sorted
    expected_rom: float


def _parse_layouts(text):
    specs = {}
    current = None

    def close(block):
        if block is None:
            return
        for key in ("name", "canvas", "gt", "edges", "rom"):
            if block.get(key) is None:
                raise PanelError(f"panel block missing {key!r} line")
        spec = PanelSpec(
            name=block["name"],
            canvas=block["canvas"],
            gt_rects=tuple(block["gt"]),
            pred_rects=tuple(block.get("pred") or ()),
            edges=tuple(sorted(block["edges"])),
            expected_rom=block["rom"],
        )
        if spec.name in specs:
            raise PanelError(f"duplicate panel {spec.name!r}")
        specs[spec.name] = spec

    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *rest = line.split()
        if word == "panel":
            close(current)
            current = {"name": rest[0], "gt": [], "pred": [], "edges": None}
        elif current is None:
            raise PanelError(f"{word!r} line before any panel line")
        elif word == "canvas":
            current["canvas"] = (int(rest[0]), int(rest[1]))
        elif word in ("gt", "pred"):
            if len(rest) != 4:
                raise PanelError(f"{word} line needs 4 ints: {line!r}")
            current[word].append(tuple(int(v) for v in rest))
        elif word == "edges":
            pairs = []
            for token in rest:
                g, s = token.split(":")
                pairs.append((int(g), int(s)))
            current["edges"] = pairs
        elif word == "rom":
            current["rom"] = float(rest[0])
        else:
            raise PanelError(f"unknown layout directive {word!r}")
    close(current)
    return specs


@lru_cache(maxsize=1)
def canonical_panels():
    """All panels from the layout table, keyed by name."""
    text = (
        resources.files("segmetrics.synthetic").joinpath(_LAYOUT_FILE).read_text()
    )
    return _parse_layouts(text)


def _paint(canvas, rects):
    grid = np.zeros(canvas, dtype=np.int32)
    h, w = canvas
    for row, col, rh, rw in rects:
        if row < 0 or col < 0 or row + rh > h or col + rw > w:
            raise PanelError(f"rect {(row, col, rh, rw)} leaves the {canvas} canvas")
        grid[row : row + rh, col : col + rw] = PANEL_CLASS
    return grid


def _check_rect_ids(regions, rects, side, name):
    if regions.region_count != len(rects):
        raise PanelError(
            f"panel {name}: {len(rects)} {side} rects produced "
            f"{regions.region_count} regions"
        )
    for i, (row, col, _, _) in enumerate(rects):
        if regions.labels[row, col] != i + 1:
            raise PanelError(
                f"panel {name}: {side} rect {i} is not region {i}; rects must be "
                "disjoint and listed in row-major order"
            )


def generate_panel(spec, connectivity=8):
    """Materialize one panel as (gt, pred) label maps.

    The painted maps are re-measured and compared against the declared
    edges and expected value; any mismatch raises PanelError rather than
    returning a fixture that contradicts its own documentation.
    """
    gt = LabelMap(_paint(spec.canvas, spec.gt_rects), PANEL_NUM_CLASSES)
    pred = LabelMap(_paint(spec.canvas, spec.pred_rects), PANEL_NUM_CLASSES)
    gt_regions = extract_regions(gt, PANEL_CLASS, connectivity)
    pred_regions = extract_regions(pred, PANEL_CLASS, connectivity)
    _check_rect_ids(gt_regions, spec.gt_rects, "gt", spec.name)
    _check_rect_ids(pred_regions, spec.pred_rects, "pred", spec.name)
    graph = build_overlap_graph(gt_regions, pred_regions)
    realized = tuple(sorted(zip(graph.edge_gt.tolist(), graph.edge_pred.tolist())))
    if realized != spec.edges:
        raise PanelError(
            f"panel {spec.name}: realized edges {realized} != declared {spec.edges}"
        )
    value = rom(graph).value
    if abs(value - spec.expected_rom) > 1e-12:
        raise PanelError(
            f"panel {spec.name}: realized measure {value!r} != declared "
            f"{spec.expected_rom!r}"
        )
    return gt, pred


def panel_pair(name, connectivity=8):
    """Convenience lookup + generation by panel name."""
    panels = canonical_panels()
    if name not in panels:
        raise PanelError(f"unknown panel {name!r}; have {sorted(panels)}")
    return generate_panel(panels[name], connectivity)
