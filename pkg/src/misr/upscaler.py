"""Projection of LR error maps into HR space.

Two routes are provided:

``upscale_ete``
    Per-sub-location normalized contribution filters applied in LR space,
    followed by a pixel shuffle.  On interior pixels this is exactly
    ``A^T e / diag(A^T A)`` for ``A = D H F_d``.
``upscale_interp``
    The conventional chain: bicubic enlargement, then ``H^T`` and ``F_d^T``
    in HR space.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from . import kernels
from .image import bicubic_resize
from .operators import BlurKernel, Displacement, blur_adjoint, warp_adjoint

__all__ = [
    "FilterBank",
    "filter_support",
    "build_filter_bank",
    "upscale_ete",
    "upscale_interp",
    "shuffle",
    "unshuffle",
]


def filter_support(kernel_size: int, scale: int) -> int:
    """LR filter side length ``ceil((a + 1) / scale + 1)``."""
    return math.ceil((kernel_size + 1) / scale + 1)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Normalized contribution filters for one frame.

    ``filters[sr, sc]`` is the ``t x t`` filter for HR pixels at phase
    ``(sr, sc)``; tap ``(i, j)`` reads the LR error map at
    ``(P + origins[sr, sc, 0] + i, Q + origins[sr, sc, 1] + j)`` for the HR
    pixel ``(scale*P + sr, scale*Q + sc)``.
    """

    scale: int
    support: int
    filters: np.ndarray     # (scale, scale, t, t), normalized T / ||T||^2
    raw_norms: np.ndarray   # (scale, scale), ||T||^2
    origins: np.ndarray     # (scale, scale, 2) int
    displacement: Displacement

    def raw(self, sr: int, sc: int) -> np.ndarray:
        """Unnormalized contribution distribution ``T`` for one sub-location."""
        return self.filters[sr, sc] * self.raw_norms[sr, sc]

    def dump(self, fh) -> None:
        fh.write(f"# scale={self.scale} support={self.support} "
                 f"d=({self.displacement.dy!r}, {self.displacement.dx!r})\n")
        for sr in range(self.scale):
            for sc in range(self.scale):
                oy, ox = self.origins[sr, sc]
                fh.write(f"sub {sr} {sc} origin {oy} {ox} norm {self.raw_norms[sr, sc]!r}\n")
                for row in self.filters[sr, sc]:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _combined_kernel(k: BlurKernel, fy: float, fx: float) -> np.ndarray:
    # blur composed with the sub-pixel bilinear taps; index o + h holds offset o
    w = np.outer([1.0 - fy, fy], [1.0 - fx, fx])
    return convolve2d(k.taps, w, mode="full")


@functools.lru_cache(maxsize=256)
def _subpixel_bank(kernel_bytes: bytes, size: int, scale: int, fy: float, fx: float):
    taps = np.frombuffer(kernel_bytes, dtype=np.float64).reshape(size, size)
    k = BlurKernel(taps)
    h = k.half
    g = _combined_kernel(k, fy, fx)
    n = g.shape[0]  # size + 1, offsets -h .. h+1
    t = filter_support(size, scale)
    m_lo = -(h // scale)
    raw = np.zeros((scale, scale, t, t))
    for sr in range(scale):
        for sc in range(scale):
            for i in range(t):
                gi = scale * (m_lo + i) - sr + h
                if not 0 <= gi < n:
                    continue
                for j in range(t):
                    gj = scale * (m_lo + j) - sc + h
                    if 0 <= gj < n:
                        raw[sr, sc, i, j] = g[gi, gj]
    # every nonzero tap of g must have landed inside the t x t window
    if not np.isclose(raw.sum(), g.sum(), rtol=0, atol=1e-12):
        raise AssertionError("filter window too small for the combined kernel")
    raw.setflags(write=False)
    return raw, m_lo


def build_filter_bank(k: BlurKernel, scale: int, d: Displacement) -> FilterBank:
    if scale < 1:
        raise ValueError("scale must be >= 1")
    fy, fx = d.subpixel
    raw_sub, m_lo = _subpixel_bank(k.key(), k.size, scale, fy, fx)
    iy, ix = d.integer
    qy, ry = divmod(iy, scale)
    qx, rx = divmod(ix, scale)
    t = raw_sub.shape[-1]
    filters = np.zeros((scale, scale, t, t))
    norms = np.zeros((scale, scale))
    origins = np.zeros((scale, scale, 2), dtype=np.int64)
    for sr in range(scale):
        cy, pr = divmod(sr + ry, scale)
        for sc in range(scale):
            cx, pc = divmod(sc + rx, scale)
            T = raw_sub[pr, pc]
            nrm = float(np.sum(T * T))
            norms[sr, sc] = nrm
            if nrm > 0.0:
                filters[sr, sc] = T / nrm
            origins[sr, sc] = (m_lo + qy + cy, m_lo + qx + cx)
    for a in (filters, norms, origins):
        a.setflags(write=False)
    return FilterBank(scale, t, filters, norms, origins, d)


def shuffle(maps: np.ndarray) -> np.ndarray:
    """Stack ``(s, s, h, w)`` of sub-location maps -> ``(s*h, s*w)`` HR image."""
    s1, s2, h, w = maps.shape
    if s1 != s2:
        raise ValueError("sub-location stack must be square")
    return maps.transpose(2, 0, 3, 1).reshape(h * s1, w * s1)


def unshuffle(img: np.ndarray, scale: int) -> np.ndarray:
    H, W = img.shape
    if H % scale or W % scale:
        raise ValueError(f"image {H}x{W} is not divisible by scale {scale}")
    return img.reshape(H // scale, scale, W // scale, scale).transpose(1, 3, 0, 2).copy()


def upscale_ete(e: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Filter the LR error map per sub-location and shuffle into HR space."""
    e = np.ascontiguousarray(e, dtype=np.float64)
    if e.ndim != 2:
        raise ValueError("expected a 2-D error map")
    return kernels.ete_upscale(e, bank.filters, bank.origins)


def upscale_interp(e: np.ndarray, k: BlurKernel, d: Displacement, scale: int) -> np.ndarray:
    """Interpolation baseline: bicubic enlargement, then ``H^T`` and ``F^T``."""
    up = bicubic_resize(e, scale)
    return warp_adjoint(blur_adjoint(up, k), d)
