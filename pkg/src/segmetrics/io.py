"""Reading and writing label maps and confidence maps.

Two interchange formats are supported for each kind of map:

* single-channel PNG, 8- or 16-bit. Label maps store the class id directly
  in the pixel value; confidence maps store ``round(c * max_value)`` and are
  divided by the bit depth's max value on load.
* a raw little-endian binary layout: ``u16 width, u16 height`` followed by
  the row-major payload, ``u16`` class ids for label maps or ``f32``
  confidences for confidence maps.

Malformed files raise :class:`~segmetrics.errors.FormatError` carrying the
path and, for binary files, the byte offset of the first offending datum.
Class ids are never remapped silently: anything outside the declared range
is an error unless an explicit remap table covers it.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError
from .maps import DEFAULT_IGNORE_ID, ConfidenceMap, LabelMap

_LABEL_HEADER = struct.Struct("<HH")
_CONF_HEADER = struct.Struct("<HH")


def _resolve_format(path, fmt):
    if fmt not in ("auto", "png", "bin"):
        raise ValueError(f"unknown format {fmt!r}")
    if fmt != "auto":
        return fmt
    return "png" if Path(path).suffix.lower() == ".png" else "bin"


def _decode_png_channel(path):
    """Single channel from a PNG as an integer array, plus its max value."""
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise FormatError(f"not a readable PNG ({exc})", path=path) from exc
    if img.mode == "P":
        img = img.convert("L")
    if img.mode == "L":
        return np.asarray(img, dtype=np.int64), 255
    if img.mode in ("I;16", "I;16B", "I;16L"):
        return np.asarray(img, dtype=np.int64), 65535
    if img.mode == "I":
        arr = np.asarray(img, dtype=np.int64)
        if arr.min() < 0 or arr.max() > 65535:
            raise FormatError(
                f"32-bit PNG values span {arr.min()}..{arr.max()}, beyond 16-bit ids",
                path=path,
            )
        return arr, 65535
    raise FormatError(
        f"unsupported PNG mode {img.mode!r}; maps must be single-channel", path=path
    )


def _apply_remap(values, remap, path):
    if not remap:
        return values
    out = values.copy()
    for raw, target in remap.items():
        out[values == int(raw)] = int(target)
    return out


def _validate_label_values(values, num_classes, ignore_id, path, offset_of):
    """Reject ids outside [0, num_classes) that are not the ignore id."""
    ok = (values >= 0) & (values < num_classes)
    if ignore_id is not None:
        ok |= values == ignore_id
    if ok.all():
        return
    flat_bad = int(np.flatnonzero(~ok.ravel())[0])
    h, w = values.shape
    r, c = divmod(flat_bad, w)
    raise FormatError(
        f"pixel ({r}, {c}) holds id {int(values[r, c])}, outside classes "
        f"0..{num_classes - 1} and ignore id {ignore_id}; pass a remap table "
        "to translate foreign ids",
        path=path,
        byte_offset=offset_of(flat_bad),
    )


def load_label_map(path, num_classes, ignore_id=DEFAULT_IGNORE_ID, *, remap=None, fmt="auto"):
    """Load a label map from PNG or raw binary.

    Args:
        path: file to read.
        num_classes: declared class count K; ids must fall in [0, K) after
            remapping, except the ignore id.
        ignore_id: void label, or None when the dataset has no void pixels.
        remap: optional {raw id: class id} table applied before validation.
        fmt: "png", "bin", or "auto" to pick by file suffix.
    """
    kind = _resolve_format(path, fmt)
    if kind == "png":
        values, _ = _decode_png_channel(path)
        values = _apply_remap(values, remap, path)
        # PNG pixels have no byte-exact storage offset; report pixel index.
        _validate_label_values(values, num_classes, ignore_id, path, lambda i: None)
        return LabelMap(values, num_classes, ignore_id)

    raw = Path(path).read_bytes()
    if len(raw) < _LABEL_HEADER.size:
        raise FormatError(
            f"file is {len(raw)} bytes, shorter than the 4-byte header",
            path=path,
            byte_offset=len(raw),
        )
    width, height = _LABEL_HEADER.unpack_from(raw, 0)
    if width == 0:
        raise FormatError("width must be nonzero", path=path, byte_offset=0)
    if height == 0:
        raise FormatError("height must be nonzero", path=path, byte_offset=2)
    expected = _LABEL_HEADER.size + 2 * width * height
    if len(raw) != expected:
        raise FormatError(
            f"payload for {width}x{height} u16 ids needs {expected} bytes, file has {len(raw)}",
            path=path,
            byte_offset=min(len(raw), expected),
        )
    values = (
        np.frombuffer(raw, dtype="<u2", count=width * height, offset=_LABEL_HEADER.size)
        .astype(np.int64)
        .reshape(height, width)
    )
    values = _apply_remap(values, remap, path)
    _validate_label_values(
        values, num_classes, ignore_id, path, lambda i: _LABEL_HEADER.size + 2 * i
    )
    return LabelMap(values, num_classes, ignore_id)


def save_label_map(label_map, path, fmt="auto"):
    """Write a label map as PNG or raw binary (see module docstring)."""
    kind = _resolve_format(path, fmt)
    data = label_map.data
    if kind == "png":
        high = int(data.max())
        if high <= 255:
            img = Image.fromarray(data.astype(np.uint8), mode="L")
        else:
            img = Image.fromarray(data.astype(np.uint16))
        img.save(path, format="PNG")
        return
    h, w = data.shape
    if w > 65535 or h > 65535:
        raise FormatError(f"{w}x{h} exceeds the u16 dimension limit", path=path)
    if int(data.max()) > 65535:
        raise FormatError("class ids exceed u16", path=path)
    payload = data.astype("<u2").tobytes()
    Path(path).write_bytes(_LABEL_HEADER.pack(w, h) + payload)


def load_confidence_map(path, fmt="auto"):
    """Load a confidence map from PNG (value / max) or raw binary f32."""
    kind = _resolve_format(path, fmt)
    if kind == "png":
        values, max_value = _decode_png_channel(path)
        return ConfidenceMap(values.astype(np.float64) / float(max_value))

    raw = Path(path).read_bytes()
    if len(raw) < _CONF_HEADER.size:
        raise FormatError(
            f"file is {len(raw)} bytes, shorter than the 4-byte header",
            path=path,
            byte_offset=len(raw),
        )
    width, height = _CONF_HEADER.unpack_from(raw, 0)
    if width == 0:
        raise FormatError("width must be nonzero", path=path, byte_offset=0)
    if height == 0:
        raise FormatError("height must be nonzero", path=path, byte_offset=2)
    expected = _CONF_HEADER.size + 4 * width * height
    if len(raw) != expected:
        raise FormatError(
            f"payload for {width}x{height} f32 needs {expected} bytes, file has {len(raw)}",
            path=path,
            byte_offset=min(len(raw), expected),
        )
    values = np.frombuffer(raw, dtype="<f4", count=width * height, offset=_CONF_HEADER.size)
    bad = ~np.isfinite(values) | (values < 0.0) | (values > 1.0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise FormatError(
            f"confidence {values[i]} at pixel {i} is outside [0, 1]",
            path=path,
            byte_offset=_CONF_HEADER.size + 4 * i,
        )
    return ConfidenceMap(values.astype(np.float64).reshape(height, width))


def save_confidence_map(conf, path, fmt="auto"):
    """Write a confidence map; PNG quantizes to 16-bit, binary keeps f32."""
    kind = _resolve_format(path, fmt)
    data = conf.data
    if kind == "png":
        img = Image.fromarray(np.round(data * 65535.0).astype(np.uint16))
        img.save(path, format="PNG")
        return
    h, w = data.shape
    if w > 65535 or h > 65535:
        raise FormatError(f"{w}x{h} exceeds the u16 dimension limit", path=path)
    payload = data.astype("<f4").tobytes()
    Path(path).write_bytes(_CONF_HEADER.pack(w, h) + payload)
