"""Label-map and confidence-map containers.

Both types are thin immutable wrappers around 2-D numpy arrays carrying the
validation every metric in this package relies on: class ids stay in range,
confidences stay inside [0, 1], and paired maps share a canvas.

A label map holds, per pixel, either a class id in ``[0, num_classes - 1]``,
the ignore id for void pixels, or ``num_classes`` itself, which is the
sentinel for predictions relabeled to "unknown" by confidence filtering.
Class 0 is background by convention; evaluation code treats the background
id as configurable.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, InvalidClassError, InvalidPairingError

DEFAULT_IGNORE_ID = 255


class LabelMap:
    """Per-pixel class assignment on a fixed canvas.

    The pixel array is copied on construction, stored as ``int32`` in
    row-major (height, width) layout, and frozen. Instances are safe to
    share across threads.
    """

    __slots__ = ("data", "num_classes", "ignore_id")

    def __init__(self, data, num_classes, ignore_id=DEFAULT_IGNORE_ID):
        arr = np.asarray(data)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"label map must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise DimensionMismatchError("label map must not be empty")
        if not np.issubdtype(arr.dtype, np.integer):
            raise InvalidClassError(f"label map must hold integers, got dtype {arr.dtype}")
        if not isinstance(num_classes, (int, np.integer)) or num_classes < 1:
            raise InvalidClassError(f"num_classes must be a positive int, got {num_classes!r}")
        num_classes = int(num_classes)
        if ignore_id is not None:
            ignore_id = int(ignore_id)
            # The unknown sentinel equals num_classes, so the ignore id must
            # sit strictly outside [0, num_classes].
            if 0 <= ignore_id <= num_classes:
                raise InvalidClassError(
                    f"ignore id {ignore_id} collides with class ids 0..{num_classes}"
                )
        arr = arr.astype(np.int32, copy=True)
        ok = (arr >= 0) & (arr <= num_classes)
        if ignore_id is not None:
            ok |= arr == ignore_id
        if not ok.all():
            r, c = np.argwhere(~ok)[0]
            raise InvalidClassError(
                f"pixel ({r}, {c}) holds value {arr[r, c]}, outside classes "
                f"0..{num_classes - 1}, unknown id {num_classes}"
                + (f", ignore id {ignore_id}" if ignore_id is not None else "")
            )
        arr.setflags(write=False)
        self.data = arr
        self.num_classes = num_classes
        self.ignore_id = ignore_id

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @property
    def unknown_id(self):
        """Class id used for low-confidence predictions."""
        return self.num_classes

    def replace_data(self, data):
        """New map with the same metadata and different pixels."""
        return LabelMap(data, self.num_classes, self.ignore_id)

    def class_ids(self):
        """Sorted real class ids present (ignore and unknown excluded)."""
        values = np.unique(self.data)
        return [int(v) for v in values if 0 <= v < self.num_classes]

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.ignore_id == other.ignore_id
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return (
            f"LabelMap(shape={self.shape}, num_classes={self.num_classes}, "
            f"ignore_id={self.ignore_id})"
        )


class ConfidenceMap:
    """Per-pixel confidence in [0, 1], stored as float64 and frozen."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatchError(
                f"confidence map must be 2-D, got shape {arr.shape}"
            )
        if arr.size == 0:
            raise DimensionMismatchError("confidence map must not be empty")
        if not np.isfinite(arr).all():
            r, c = np.argwhere(~np.isfinite(arr))[0]
            raise InvalidClassError(f"confidence at ({r}, {c}) is not finite")
        if (arr < 0.0).any() or (arr > 1.0).any():
            bad = (arr < 0.0) | (arr > 1.0)
            r, c = np.argwhere(bad)[0]
            raise InvalidClassError(
                f"confidence at ({r}, {c}) is {arr[r, c]}, outside [0, 1]"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, ConfidenceMap):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"ConfidenceMap(shape={self.shape})"


def check_same_canvas(a, b, what="maps"):
    """Raise unless two maps share (height, width)."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{what} differ in size: {a.shape} vs {b.shape}")


def check_paired(gt, pred):
    """Validate that a gt/prediction pair can be evaluated together."""
    check_same_canvas(gt, pred, "gt and prediction")
    if gt.num_classes != pred.num_classes:
        raise InvalidPairingError(
            f"gt declares {gt.num_classes} classes, prediction {pred.num_classes}"
        )
    if gt.ignore_id != pred.ignore_id:
        raise InvalidPairingError(
            f"gt ignore id {gt.ignore_id} differs from prediction's {pred.ignore_id}"
        )
