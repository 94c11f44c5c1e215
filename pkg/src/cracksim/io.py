"""Raster file formats.

* RGB images and encoded normal maps: 8-bit RGB PNG.
* Masks: 8-bit single-channel PNG with values {0, 255}.
* Depth maps and affinity previews: 16-bit grayscale PNG.
* Raw affinity maps: ``b"AFFN"``, uint32 width, uint32 height, then
  width*height little-endian float32 values in row-major order.
"""

import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

AFFINITY_MAGIC = b"AFFN"
_HEADER = struct.Struct("<4sII")


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_rgb_png(path, rgb: np.ndarray):
    atomic_write_bytes(path, _png_bytes(Image.fromarray(to_uint8(rgb))))


def write_mask_png(path, mask: np.ndarray):
    data = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(data)))


def write_gray16_png(path, gray: np.ndarray):
    data = np.rint(np.clip(gray, 0.0, 1.0) * 65535.0).astype(np.uint16)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(data)))


def read_image(path, gray=False, size=None) -> np.ndarray:
    """Load a PNG as floats in [0, 1]; ``size`` = (width, height) resizes bilinearly."""
    with Image.open(path) as im:
        im.load()
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.float64) / 65535.0
            if size is not None and arr.shape != (size[1], size[0]):
                arr = np.asarray(Image.fromarray(arr.astype(np.float32)).resize(size, Image.BILINEAR),
                                 dtype=np.float64)
            if not gray:
                arr = np.repeat(arr[..., None], 3, axis=-1)
            return np.clip(arr, 0.0, 1.0)
        im = im.convert("L" if gray else "RGB")
        if size is not None and im.size != tuple(size):
            im = im.resize(tuple(size), Image.BILINEAR)
        return np.asarray(im, dtype=np.float64) / 255.0


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr >= 128


def write_affinity_raw(path, affinity: np.ndarray):
    a = np.asarray(affinity, dtype="<f4")
    h, w = a.shape
    atomic_write_bytes(path, _HEADER.pack(AFFINITY_MAGIC, w, h) + a.tobytes(order="C"))


def read_affinity_raw(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated affinity file")
    magic, w, h = _HEADER.unpack_from(data)
    if magic != AFFINITY_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != 4 * w * h:
        raise ValueError(f"{path}: expected {4 * w * h} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float64)


def affinity_preview(affinity: np.ndarray) -> np.ndarray:
    """Min-max normalized copy in [0, 1]; constant maps become all zeros."""
    a = np.asarray(affinity, dtype=np.float64)
    lo, hi = a.min(), a.max()
    if hi <= lo:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)
