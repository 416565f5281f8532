"""PSNR and SSIM on the 0-255 scale."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = ["MetricReport", "psnr", "ssim", "mse", "evaluate", "PSNR_INF", "SSIM_WINDOW"]

PEAK = 255.0
C1 = (0.01 * PEAK) ** 2
C2 = (0.03 * PEAK) ** 2
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

# identical images; printed as "inf"
PSNR_INF = math.inf


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    mse: float


def _pair(reference, candidate):
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(candidate, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(reference, candidate) -> float:
    a, b = _pair(reference, candidate)
    return float(np.mean((a - b) ** 2))


def psnr(reference, candidate) -> float:
    m = mse(reference, candidate)
    if m == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(PEAK * PEAK / m)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(reference, candidate) -> float:
    """Mean SSIM over 11x11 Gaussian windows (sigma 1.5), symmetric padding."""
    a, b = _pair(reference, candidate)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs a 2-D image of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    w = gaussian_window()

    def filt(z):
        return ndimage.correlate(z, w, mode="reflect")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)
    den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)
    return float(np.mean(num / den))


def evaluate(reference, candidate, clamp: bool = True) -> MetricReport:
    """Score ``candidate`` against ``reference``, clamping it to [0, 255] first."""
    b = np.asarray(candidate, dtype=np.float64)
    if clamp:
        b = np.clip(b, 0.0, PEAK)
    return MetricReport(psnr(reference, b), ssim(reference, b), mse(reference, b))
