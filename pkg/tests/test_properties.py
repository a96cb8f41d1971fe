import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from segmetrics import (
    ConfidenceMap,
    EvalConfig,
    InvalidClassError,
    LabelMap,
    apply_confidence_threshold,
    dice_error,
    evaluate_pair,
    extract_regions,
    global_consistency_error,
    iou_error,
    load_confidence_map,
    load_label_map,
    pixel_stats,
    rom,
    rum,
    save_confidence_map,
    save_label_map,
)
from segmetrics.synthetic import (
    random_label_map,
    random_map_pair,
    random_overlap_graph,
)

COMMON = settings(max_examples=30, deadline=None)

seeds = st.integers(min_value=0, max_value=10**6)


@COMMON
@given(seed=seeds)
def test_duality_on_random_graphs(seed):
    graph = random_overlap_graph(seed)
    assert rum(graph).value == rom(graph.transpose()).value
    assert rom(graph).value == rum(graph.transpose()).value


@COMMON
@given(seed=seeds)
def test_measures_bounded(seed):
    graph = random_overlap_graph(seed)
    over = rom(graph)
    under = rum(graph)
    for result in (over, under):
        assert 0.0 <= result.value < 1.0
        assert (result.value == 0.0) == (result.excess == 0)
        assert result.value == math.tanh(result.ratio * result.excess)


@COMMON
@given(seed=seeds)
def test_gce_symmetric(seed):
    gt, pred = random_map_pair(seed, height=24, width=24)
    assert global_consistency_error(gt, pred) == global_consistency_error(pred, gt)


@COMMON
@given(seed=seeds)
def test_dice_from_iou(seed):
    gt, pred = random_map_pair(seed, height=24, width=24)
    stats = pixel_stats(gt, pred)
    per_iou, _ = iou_error(stats)
    per_dice, _ = dice_error(stats)
    for k, iou_err in per_iou.items():
        if iou_err is None:
            assert per_dice[k] is None
            continue
        iou = 1.0 - iou_err
        assert per_dice[k] == pytest.approx(1.0 - 2 * iou / (1 + iou), abs=1e-12)


@COMMON
@given(seed=seeds)
def test_threshold_prunes_monotonically(seed):
    pred = random_label_map(seed, height=24, width=24)
    rng = np.random.default_rng(seed + 1)
    conf = ConfidenceMap(rng.uniform(0.0, 1.0, size=pred.shape))
    counts = []
    for tau in (0.0, 0.3, 0.6, 0.9):
        kept = apply_confidence_threshold(pred, conf, tau, 8)
        counts.append(
            sum(
                extract_regions(kept, k, 8).region_count
                for k in range(1, pred.num_classes)
            )
        )
    assert counts == sorted(counts, reverse=True)
    untouched = apply_confidence_threshold(pred, conf, 0.0, 8)
    assert np.array_equal(untouched.data, pred.data)


@COMMON
@given(seed=seeds)
def test_label_roundtrips(seed, tmp_path_factory):
    lm = random_label_map(seed, height=16, width=16, ignore_speckles=4)
    base = tmp_path_factory.mktemp("roundtrip")
    for name in ("m.png", "m.bin"):
        path = base / name
        save_label_map(lm, path)
        back = load_label_map(path, lm.num_classes, lm.ignore_id)
        assert np.array_equal(back.data, lm.data)


@COMMON
@given(seed=seeds)
def test_confidence_roundtrip_binary(seed, tmp_path_factory):
    rng = np.random.default_rng(seed)
    values = rng.uniform(0.0, 1.0, size=(9, 7)).astype(np.float32)
    conf = ConfidenceMap(values.astype(np.float64))
    path = tmp_path_factory.mktemp("conf") / "c.bin"
    save_confidence_map(conf, path)
    back = load_confidence_map(path)
    assert np.array_equal(back.data, values.astype(np.float64))


@COMMON
@given(
    value=st.integers(min_value=-5, max_value=300),
    num_classes=st.integers(min_value=2, max_value=12),
)
def test_label_map_range_check(value, num_classes):
    grid = np.zeros((3, 3), dtype=np.int32)
    grid[1, 1] = value
    valid = 0 <= value <= num_classes or value == 255
    if valid:
        LabelMap(grid, num_classes)
    else:
        with pytest.raises(InvalidClassError):
            LabelMap(grid, num_classes)


@COMMON
@given(seed=seeds)
def test_match_counts_add_up(seed):
    gt, pred = random_map_pair(seed, height=24, width=24)
    record = evaluate_pair(gt, pred, config=EvalConfig(num_classes=4))
    for cr in record.classes.values():
        if not cr.applicable:
            continue
        for threshold, (tp, fp, fn) in cr.ap_counts.items():
            assert tp + fn == cr.gt_regions
            assert tp + fp == cr.pred_regions
        tp, fp, fn = cr.pq_counts
        assert tp + fn == cr.gt_regions and tp + fp == cr.pred_regions
        assert cr.gt_split <= cr.gt_regions
        assert cr.pred_contributing <= cr.pred_regions
        assert cr.pred_merging <= cr.pred_regions
        assert cr.gt_merged <= cr.gt_regions
