"""Regularization terms R(x) and their (sub)gradients.

``tikhonov``  ||L x||^2 with L the 5-point Laplacian (replicate padding)
``tv``        sum sqrt(dx^2 + dy^2 + eps^2), forward differences
``btv``       sum_{l,m in [-P, P]} alpha^(|l|+|m|) ||x - S_{l,m} x||_1

All gradients use the exact transposes of the padded shift operators, so
finite differences agree with them at the borders as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .operators import clamped_correlate, clamped_correlate_adjoint

__all__ = ["RegularizerSpec", "reg_value", "reg_grad", "KINDS"]

KINDS = ("tikhonov", "tv", "btv")

_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class RegularizerSpec:
    kind: str = "btv"
    btv_window: int = 2
    btv_decay: float = 0.7
    tv_epsilon: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer {self.kind!r}; expected one of {KINDS}")
        if self.btv_window < 1:
            raise ValueError("btv_window must be >= 1")
        if not 0.0 < self.btv_decay <= 1.0:
            raise ValueError("btv_decay must lie in (0, 1]")
        if self.tv_epsilon <= 0:
            raise ValueError("tv_epsilon must be positive")


def _laplacian(x):
    return clamped_correlate(x, _LAPLACIAN, -1, -1)


def _laplacian_adjoint(y):
    return clamped_correlate_adjoint(y, _LAPLACIAN, -1, -1)


def _forward_diffs(x):
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    gx[:, :-1] = x[:, 1:] - x[:, :-1]
    gy[:-1] = x[1:] - x[:-1]
    return gx, gy


def _forward_diffs_adjoint(px, py):
    out = np.zeros_like(px)
    out[:, :-1] -= px[:, :-1]
    out[:, 1:] += px[:, :-1]
    out[:-1] -= py[:-1]
    out[1:] += py[:-1]
    return out


def reg_value(x: np.ndarray, spec: RegularizerSpec) -> float:
    x = np.asarray(x, dtype=np.float64)
    if spec.kind == "tikhonov":
        lx = _laplacian(x)
        return float(np.sum(lx * lx))
    if spec.kind == "tv":
        gx, gy = _forward_diffs(x)
        return float(np.sum(np.sqrt(gx * gx + gy * gy + spec.tv_epsilon ** 2)))
    if spec.kind == "btv":
        return kernels.btv_value(x, spec.btv_window, spec.btv_decay)
    raise ValueError(f"unknown regularizer {spec.kind!r}")


def reg_grad(x: np.ndarray, spec: RegularizerSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if spec.kind == "tikhonov":
        return 2.0 * _laplacian_adjoint(_laplacian(x))
    if spec.kind == "tv":
        gx, gy = _forward_diffs(x)
        mag = np.sqrt(gx * gx + gy * gy + spec.tv_epsilon ** 2)
        return _forward_diffs_adjoint(gx / mag, gy / mag)
    if spec.kind == "btv":
        return kernels.btv_grad(x, spec.btv_window, spec.btv_decay)
    raise ValueError(f"unknown regularizer {spec.kind!r}")
