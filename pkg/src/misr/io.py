"""Reading and writing 8-bit PGM (P5) and PNG images."""

from __future__ import annotations

import os
import re

import numpy as np

__all__ = [
    "ImageIOError",
    "ImageReadError",
    "ImageFormatError",
    "UnsupportedImageError",
    "load_image",
    "save_image",
    "read_pgm",
    "write_pgm",
    "to_uint8",
]


class ImageIOError(Exception):
    pass


class ImageReadError(ImageIOError):
    """File missing or unreadable."""


class ImageFormatError(ImageIOError):
    """Malformed header or truncated data."""


class UnsupportedImageError(ImageIOError):
    """Well-formed file in a variant this package does not handle (e.g. 16-bit)."""


_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)


def read_pgm(data: bytes) -> np.ndarray:
    if data[:2] != b"P5":
        raise ImageFormatError(f"bad PGM magic number {data[:2]!r}")
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("truncated PGM header")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise ImageFormatError(f"non-numeric PGM header field {m.group(1)!r}") from None
        pos = m.end()
    width, height, maxval = fields
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError("missing whitespace after PGM header")
    pos += 1
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"invalid PGM dimensions {width}x{height}")
    if maxval > 255:
        raise UnsupportedImageError(f"PGM maxval {maxval} (only 8-bit supported)")
    if maxval <= 0:
        raise ImageFormatError(f"invalid PGM maxval {maxval}")
    n = width * height
    raster = data[pos:pos + n]
    if len(raster) != n:
        raise ImageFormatError(f"PGM raster truncated: expected {n} bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64)


def write_pgm(img: np.ndarray) -> bytes:
    a = to_uint8(img)
    if a.ndim != 2:
        raise ValueError("PGM holds grayscale images only")
    h, w = a.shape
    return b"P5\n%d %d\n255\n" % (w, h) + a.tobytes()


def load_image(path) -> np.ndarray:
    """Load a P5 PGM or an 8-bit gray/RGB PNG as float64 (HxW or HxWx3)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    if data[:2] == b"P5":
        return read_pgm(data)
    if data[:8] == _PNG_MAGIC:
        return _read_png(path)
    if data[:1] == b"P":
        raise ImageFormatError(f"{path}: unsupported or malformed PNM magic {data[:2]!r}")
    raise ImageFormatError(f"{path}: unrecognized image format")


def _read_png(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I", "I;16", "I;16B", "F"):
                raise UnsupportedImageError(f"{path}: {mode} PNG (only 8-bit supported)")
            if mode in ("L", "RGB"):
                arr = np.asarray(im)
            elif mode in ("P", "LA", "1"):
                arr = np.asarray(im.convert("L"))
            else:
                arr = np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, SyntaxError, OSError) as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc
    return arr.astype(np.float64)


def save_image(path, img: np.ndarray) -> None:
    """Write ``img`` clamped and rounded to 8 bits; format from the suffix."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".pgm", ".pnm"):
        with open(path, "wb") as fh:
            fh.write(write_pgm(img))
    elif ext == ".png":
        from PIL import Image

        a = to_uint8(img)
        if a.ndim == 3 and a.shape[2] != 3:
            raise ValueError("PNG output supports gray or RGB only")
        Image.fromarray(a).save(path)
    else:
        raise ValueError(f"unsupported output format {ext!r} (use .pgm or .png)")
