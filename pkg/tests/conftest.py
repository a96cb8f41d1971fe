import numpy as np
import pytest

from segmetrics import ConfidenceMap, LabelMap, save_confidence_map, save_label_map
from segmetrics.synthetic import random_map_pair


def label(rows, num_classes, ignore_id=255):
    """Shorthand: build a LabelMap from a nested list."""
    return LabelMap(np.array(rows, dtype=np.int32), num_classes, ignore_id)


@pytest.fixture
def dataset_dirs(tmp_path):
    """Three random gt/pred pairs with constant-gradient confidences on disk.

    Returns (gt_dir, pred_dir, conf_dir); files are img0..img2 PNGs.
    """
    gt_dir = tmp_path / "gt"
    pred_dir = tmp_path / "pred"
    conf_dir = tmp_path / "conf"
    for d in (gt_dir, pred_dir, conf_dir):
        d.mkdir()
    rng = np.random.default_rng(99)
    for i in range(3):
        gt, pred = random_map_pair(i + 10)
        conf = rng.uniform(0.1, 0.9, size=gt.shape)
        save_label_map(gt, gt_dir / f"img{i}.png")
        save_label_map(pred, pred_dir / f"img{i}.png")
        save_confidence_map(ConfidenceMap(conf), conf_dir / f"img{i}.bin")
    return gt_dir, pred_dir, conf_dir
