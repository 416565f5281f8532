"""Degradation operators of the translational MISR model and their adjoints.

The observation model is ``Y_k = D H F_k X + N_k`` where ``F_k`` is a bilinear
translation, ``H`` a spatially invariant blur and ``D`` point decimation with
phase (0, 0).  Warp and blur use replicate (clamp-to-edge) padding; every
adjoint is the exact transpose of the padded map, borders included.

Images are plain 2-D ``float64`` numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "BlurKernel",
    "Displacement",
    "DegradationParams",
    "SparseOperator",
    "warp",
    "warp_adjoint",
    "blur",
    "blur_adjoint",
    "decimate",
    "zero_insert",
    "forward",
    "forward_adjoint",
    "add_noise",
    "frame_noise_seed",
    "build_sparse_operator",
    "clamped_correlate",
    "clamped_correlate_adjoint",
]

MAX_SPARSE_PIXELS = 65536


@dataclass(frozen=True, eq=False)
class BlurKernel:
    """Square, odd-sized, unit-sum point spread function."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1]:
            raise ValueError(f"kernel must be square, got shape {taps.shape}")
        if taps.shape[0] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {taps.shape[0]}")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel taps must sum to 1, got {taps.sum()!r}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def size(self) -> int:
        return self.taps.shape[0]

    @property
    def half(self) -> int:
        return self.taps.shape[0] // 2

    @classmethod
    def gaussian(cls, size: int, sigma: float) -> "BlurKernel":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        if size < 1 or size % 2 == 0:
            raise ValueError(f"kernel size must be a positive odd integer, got {size}")
        h = size // 2
        r = np.arange(-h, h + 1, dtype=np.float64)
        g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma * sigma))
        return cls(g / g.sum())

    @classmethod
    def delta(cls, size: int = 1) -> "BlurKernel":
        taps = np.zeros((size, size))
        taps[size // 2, size // 2] = 1.0
        return cls(taps)

    def key(self) -> bytes:
        return self.taps.tobytes()

    def __eq__(self, other):
        if not isinstance(other, BlurKernel):
            return NotImplemented
        return self.taps.shape == other.taps.shape and np.array_equal(self.taps, other.taps)

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True)
class Displacement:
    """Translation in HR pixel units; positive values move content down/right."""

    dy: float = 0.0
    dx: float = 0.0

    @staticmethod
    def _split(v: float) -> tuple[int, float]:
        i = math.floor(v)
        f = v - i
        if f >= 1.0:
            # tiny negative v: v - floor(v) rounds up to exactly 1
            i, f = i + 1, 0.0
        return i, f

    @property
    def integer(self) -> tuple[int, int]:
        return self._split(self.dy)[0], self._split(self.dx)[0]

    @property
    def subpixel(self) -> tuple[float, float]:
        return self._split(self.dy)[1], self._split(self.dx)[1]

    def __neg__(self) -> "Displacement":
        return Displacement(-self.dy, -self.dx)


@dataclass(frozen=True)
class DegradationParams:
    scale: int = 3
    kernel: BlurKernel = None  # type: ignore[assignment]
    noise_sigma: float = 1.0
    frames: int = 5
    shift_range: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kernel is None:
            object.__setattr__(self, "kernel", BlurKernel.gaussian(5, 1.2))
        if self.scale < 2:
            raise ValueError("scale must be >= 2")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.shift_range < 0:
            raise ValueError("shift_range must be >= 0")


# -- clamped correlation ------------------------------------------------------
#
# ``out(r, c) = sum_ij taps[i, j] * x(clip(r - oy - i), clip(c - ox - j))``
# i.e. a convolution-style stencil whose tap (i, j) reads the input at offset
# (oy + i, ox + j) behind the output pixel.  Warp and blur are both instances.


def _margins(origin: int, extent: int) -> tuple[int, int]:
    # padding needed so that r - (origin + i) stays in range for all r, i
    before = max(0, origin + extent - 1)
    after = max(0, -origin)
    return before, after


def clamped_correlate(x: np.ndarray, taps: np.ndarray, oy: int, ox: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    H, W = x.shape
    th, tw = taps.shape
    top, bottom = _margins(oy, th)
    left, right = _margins(ox, tw)
    xp = np.pad(x, ((top, bottom), (left, right)), mode="edge")
    out = np.zeros((H, W))
    for i in range(th):
        r0 = top - oy - i
        for j in range(tw):
            w = taps[i, j]
            if w == 0.0:
                continue
            c0 = left - ox - j
            out += w * xp[r0:r0 + H, c0:c0 + W]
    return out


def _fold_edges(zp: np.ndarray, top: int, bottom: int, left: int, right: int) -> np.ndarray:
    """Transpose of ``np.pad(..., mode='edge')``."""
    zp = zp.copy()
    H = zp.shape[0] - top - bottom
    W = zp.shape[1] - left - right
    if top:
        zp[top] += zp[:top].sum(axis=0)
    if bottom:
        zp[top + H - 1] += zp[top + H:].sum(axis=0)
    zp = zp[top:top + H]
    if left:
        zp[:, left] += zp[:, :left].sum(axis=1)
    if right:
        zp[:, left + W - 1] += zp[:, left + W:].sum(axis=1)
    return zp[:, left:left + W]


def clamped_correlate_adjoint(y: np.ndarray, taps: np.ndarray, oy: int, ox: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    H, W = y.shape
    th, tw = taps.shape
    top, bottom = _margins(oy, th)
    left, right = _margins(ox, tw)
    zp = np.zeros((H + top + bottom, W + left + right))
    for i in range(th):
        r0 = top - oy - i
        for j in range(tw):
            w = taps[i, j]
            if w == 0.0:
                continue
            c0 = left - ox - j
            zp[r0:r0 + H, c0:c0 + W] += w * y
    return _fold_edges(zp, top, bottom, left, right)


# -- warp ---------------------------------------------------------------------


def _bilinear_taps(d: Displacement) -> tuple[np.ndarray, int, int]:
    fy, fx = d.subpixel
    iy, ix = d.integer
    wy = np.array([1.0 - fy, fy])
    wx = np.array([1.0 - fx, fx])
    return np.outer(wy, wx), iy, ix


def warp(src: np.ndarray, d: Displacement) -> np.ndarray:
    """Bilinear translation: ``out(r, c)`` samples ``src`` at ``(r - dy, c - dx)``."""
    taps, iy, ix = _bilinear_taps(d)
    return clamped_correlate(src, taps, iy, ix)


def warp_adjoint(src: np.ndarray, d: Displacement) -> np.ndarray:
    taps, iy, ix = _bilinear_taps(d)
    return clamped_correlate_adjoint(src, taps, iy, ix)


# -- blur ---------------------------------------------------------------------


def _check_blur(src: np.ndarray, k: BlurKernel) -> None:
    if src.ndim != 2:
        raise ValueError("expected a 2-D image")
    if k.size > src.shape[0] or k.size > src.shape[1]:
        raise ValueError(f"kernel of size {k.size} is larger than image {src.shape}")


def blur(src: np.ndarray, k: BlurKernel) -> np.ndarray:
    """2-D convolution with ``k`` under replicate padding."""
    src = np.asarray(src, dtype=np.float64)
    _check_blur(src, k)
    return clamped_correlate(src, k.taps, -k.half, -k.half)


def blur_adjoint(src: np.ndarray, k: BlurKernel) -> np.ndarray:
    src = np.asarray(src, dtype=np.float64)
    _check_blur(src, k)
    return clamped_correlate_adjoint(src, k.taps, -k.half, -k.half)


# -- decimation ---------------------------------------------------------------


def decimate(src: np.ndarray, scale: int) -> np.ndarray:
    src = np.asarray(src, dtype=np.float64)
    H, W = src.shape
    if scale < 1:
        raise ValueError("scale must be >= 1")
    if H % scale or W % scale:
        raise ValueError(f"image {H}x{W} is not divisible by scale {scale}")
    return src[::scale, ::scale].copy()


def zero_insert(src: np.ndarray, scale: int) -> np.ndarray:
    src = np.asarray(src, dtype=np.float64)
    if scale < 1:
        raise ValueError("scale must be >= 1")
    H, W = src.shape
    out = np.zeros((H * scale, W * scale))
    out[::scale, ::scale] = src
    return out


# -- composed model -----------------------------------------------------------


def forward(x: np.ndarray, d: Displacement, k: BlurKernel, scale: int) -> np.ndarray:
    """``D H F_d x`` (noise-free)."""
    x = np.asarray(x, dtype=np.float64)
    H, W = x.shape
    if H % scale or W % scale:
        raise ValueError(f"HR image {H}x{W} is not divisible by scale {scale}")
    return decimate(blur(warp(x, d), k), scale)


def forward_adjoint(e: np.ndarray, d: Displacement, k: BlurKernel, scale: int) -> np.ndarray:
    return warp_adjoint(blur_adjoint(zero_insert(e, scale), k), d)


def frame_noise_seed(seed: int, frame_index: int) -> int:
    """Deterministic 63-bit noise seed for one frame of a burst."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(frame_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def add_noise(src: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise drawn from ``PCG64(seed)``.

    Samples come from ``numpy.random.Generator(PCG64(seed)).standard_normal``
    (ziggurat transform), filled in row-major order.
    """
    if sigma < 0:
        raise ValueError("noise sigma must be >= 0")
    src = np.asarray(src, dtype=np.float64)
    if sigma == 0:
        return src.copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    return src + sigma * rng.standard_normal(src.shape)


# -- explicit matrix oracle ---------------------------------------------------


class SparseOperator:
    """Explicit matrix of ``D H F_d`` built column by column from one-hot images.

    Only meant for small images; it is the brute-force reference the
    matrix-free operators and the filter bank are checked against.
    """

    def __init__(self, matrix: sp.csc_matrix, hr_shape: tuple[int, int], lr_shape: tuple[int, int]):
        self.matrix = matrix.tocsc()
        self.hr_shape = hr_shape
        self.lr_shape = lr_shape

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def entries(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[i]), int(coo.col[i]), float(coo.data[i])) for i in order]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(x, dtype=np.float64).ravel()).reshape(self.lr_shape)

    def rmatvec(self, e: np.ndarray) -> np.ndarray:
        return (self.matrix.T @ np.asarray(e, dtype=np.float64).ravel()).reshape(self.hr_shape)

    def column(self, index: int) -> np.ndarray:
        return self.matrix[:, index].toarray().reshape(self.lr_shape)

    def gram_diagonal(self) -> np.ndarray:
        """``diag(A^T A)`` reshaped to the HR grid."""
        sq = self.matrix.multiply(self.matrix)
        return np.asarray(sq.sum(axis=0)).reshape(self.hr_shape)

    def dump(self, fh) -> None:
        fh.write(f"# rows={self.rows} cols={self.cols}\n")
        for r, c, w in self.entries():
            fh.write(f"{r} {c} {w!r}\n")


def build_sparse_operator(hr_shape: tuple[int, int], d: Displacement, k: BlurKernel,
                          scale: int) -> SparseOperator:
    H, W = hr_shape
    n = H * W
    if n > MAX_SPARSE_PIXELS:
        raise ValueError(f"{n} HR pixels exceeds the sparse oracle limit of {MAX_SPARSE_PIXELS}")
    if H % scale or W % scale:
        raise ValueError(f"HR image {H}x{W} is not divisible by scale {scale}")
    lr_shape = (H // scale, W // scale)
    rows, cols, vals = [], [], []
    basis = np.zeros((H, W))
    for i in range(n):
        basis.flat[i] = 1.0
        col = forward(basis, d, k, scale).ravel()
        basis.flat[i] = 0.0
        nz = np.flatnonzero(col)
        rows.append(nz)
        cols.append(np.full(nz.size, i))
        vals.append(col[nz])
    m = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(lr_shape[0] * lr_shape[1], n),
    )
    return SparseOperator(m, (H, W), lr_shape)
