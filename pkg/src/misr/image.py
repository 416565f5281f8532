"""Resampling and color conversion for 0-255 real-valued images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ImageYuv",
    "bicubic_resize",
    "rgb_to_yuv",
    "yuv_to_rgb",
    "center_crop",
]

CUBIC_A = -0.5


def _cubic(x: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    x = np.abs(x)
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _output_size(n: int, factor: float) -> int:
    return int(math.floor(n * factor + 0.5))


def _resize_matrix(n_in: int, n_out: int, factor: float) -> sp.csr_matrix:
    # output sample i sits at input coordinate i / factor (pixel 0 aligned)
    u = np.arange(n_out) / factor
    base = np.floor(u).astype(np.int64)
    frac = u - base
    rows, cols, vals = [], [], []
    for off in (-1, 0, 1, 2):
        w = _cubic(frac - off)
        idx = np.clip(base + off, 0, n_in - 1)
        rows.append(np.arange(n_out))
        cols.append(idx)
        vals.append(w)
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_out, n_in),
    )
    m.sum_duplicates()
    return m


def bicubic_resize(src: np.ndarray, factor: float) -> np.ndarray:
    """Separable cubic-convolution resampling (a = -0.5, replicate borders).

    Output sample ``(i, j)`` is taken at input coordinate
    ``(i / factor, j / factor)``, so input pixel (0, 0) stays at the origin and
    ``decimate(bicubic_resize(y, s), s) == y`` for integer ``s``.
    """
    if factor <= 0:
        raise ValueError(f"resize factor must be positive, got {factor}")
    src = np.asarray(src, dtype=np.float64)
    H, W = src.shape
    Ho, Wo = _output_size(H, factor), _output_size(W, factor)
    if Ho < 1 or Wo < 1:
        raise ValueError(f"factor {factor} gives an empty image")
    ry = _resize_matrix(H, Ho, factor)
    rx = _resize_matrix(W, Wo, factor)
    return np.asarray(ry @ (rx @ src.T).T)


def center_crop(img: np.ndarray, multiple: int) -> np.ndarray:
    """Crop the largest centered region whose sides are divisible by ``multiple``."""
    H, W = img.shape[:2]
    h, w = H - H % multiple, W - W % multiple
    if h == 0 or w == 0:
        raise ValueError(f"image {H}x{W} is smaller than scale {multiple}")
    top, left = (H - h) // 2, (W - w) // 2
    return img[top:top + h, left:left + w]


# BT.601 full range (JPEG/JFIF)
_RGB2YUV = np.array([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
])
_YUV2RGB = np.linalg.inv(_RGB2YUV)
_OFFSET = np.array([0.0, 128.0, 128.0])


@dataclass(frozen=True)
class ImageYuv:
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if not (self.y.shape == self.u.shape == self.v.shape):
            raise ValueError("Y, U and V planes must share dimensions")


def rgb_to_yuv(rgb: np.ndarray) -> ImageYuv:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {rgb.shape}")
    yuv = rgb @ _RGB2YUV.T + _OFFSET
    return ImageYuv(yuv[..., 0], yuv[..., 1], yuv[..., 2])


def yuv_to_rgb(yuv: ImageYuv) -> np.ndarray:
    stack = np.stack([yuv.y, yuv.u, yuv.v], axis=-1) - _OFFSET
    return stack @ _YUV2RGB.T
