"""Iterative MISR reconstruction.

Starting from a bicubic enlargement of the target frame, the estimate is
updated with a fixed step

    x <- x - eta * (sum_k U_k(D H F_k x - y_k) + lam * dR/dx)

where ``U_k`` is either the end-to-end upscaler (a diagonally preconditioned
adjoint) or the interpolation chain.  Iteration stops once the relative
change ``||x_l - x_{l-1}|| / ||x_{l-1}||`` drops below ``eps`` or after
``max_iter`` updates.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .image import bicubic_resize
from .operators import BlurKernel, Displacement, forward
from .regularizers import RegularizerSpec, reg_grad, reg_value
from .upscaler import FilterBank, build_filter_bank, upscale_ete, upscale_interp

__all__ = [
    "SolverConfig",
    "FrameSet",
    "TraceRecord",
    "ConvergenceTrace",
    "DivergenceError",
    "compute_error_maps",
    "update_step",
    "reconstruct",
    "MODES",
]

MODES = ("ete", "interp")
ETE_NORMALIZATIONS = ("joint", "frame")
DIVERGENCE_LIMIT = 1e3
# 8-bit images live in [0, 255]; an estimate this far outside has blown up
MAGNITUDE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, reason: str):
        super().__init__(f"iteration {iteration}: {reason}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    eta: float = 0.05
    lam: float = 0.1
    eps: float = 1e-5
    max_iter: int = 30
    regularizer: RegularizerSpec = field(default_factory=RegularizerSpec)
    mode: str = "ete"
    ete_normalize: str = "joint"

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown upscaler mode {self.mode!r}; expected one of {MODES}")
        if self.ete_normalize not in ETE_NORMALIZATIONS:
            raise ValueError(f"unknown ete normalization {self.ete_normalize!r}")


@dataclass
class FrameSet:
    """LR burst; frame 0 is the target and carries zero displacement."""

    frames: list
    displacements: list
    kernel: BlurKernel
    scale: int
    seeds: list | None = None

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a FrameSet needs at least one frame")
        if len(self.frames) != len(self.displacements):
            raise ValueError("one displacement per frame is required")
        self.frames = [np.asarray(f, dtype=np.float64) for f in self.frames]
        shape = self.frames[0].shape
        if any(f.shape != shape for f in self.frames):
            raise ValueError("all frames must share dimensions")
        d0 = self.displacements[0]
        if d0.dy != 0 or d0.dx != 0:
            raise ValueError("the target frame must have zero displacement")

    @property
    def lr_shape(self) -> tuple[int, int]:
        return self.frames[0].shape

    @property
    def hr_shape(self) -> tuple[int, int]:
        h, w = self.lr_shape
        return h * self.scale, w * self.scale

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    rel_change: float
    fidelity: float
    reg_value: float
    ms: float


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self) -> int:
        return len(self.records)

    CSV_HEADER = ("iter", "rel_change", "fidelity", "reg_value", "ms")

    def to_csv(self, fh=None, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in self.records:
            w.writerow([r.iteration, repr(r.rel_change), repr(r.fidelity), repr(r.reg_value),
                        f"{r.ms:.3f}" if timing else "0"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def compute_error_maps(x: np.ndarray, fs: FrameSet) -> list:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != fs.hr_shape:
        raise ValueError(f"HR estimate {x.shape} does not match {fs.hr_shape}")
    return [forward(x, d, fs.kernel, fs.scale) - y for y, d in zip(fs.frames, fs.displacements)]


def build_banks(fs: FrameSet) -> list:
    return [build_filter_bank(fs.kernel, fs.scale, d) for d in fs.displacements]


def joint_weights(banks: Sequence[FilterBank]) -> np.ndarray:
    """Per-frame, per-sub-location weights ``||T_k||^2 / sum_j ||T_j||^2``.

    Applied to the per-frame end-to-end maps they turn the sum of per-frame
    normalized terms into ``sum_k A_k^T e_k / sum_k diag(A_k^T A_k)``.
    Shape ``(M, s, s)``.
    """
    norms = np.stack([b.raw_norms for b in banks])
    total = norms.sum(axis=0)
    return np.divide(norms, total, out=np.zeros_like(norms), where=total > 0)


def _data_direction(errors: Sequence[np.ndarray], fs: FrameSet, cfg: SolverConfig,
                    banks: Sequence[FilterBank] | None) -> np.ndarray:
    total = np.zeros(fs.hr_shape)
    s = fs.scale
    if cfg.mode == "ete":
        if banks is None:
            banks = build_banks(fs)
        if cfg.ete_normalize == "joint" and len(banks) > 1:
            weights = joint_weights(banks)
            for e, bank, w in zip(errors, banks, weights):
                g = upscale_ete(e, bank)
                for sr in range(s):
                    for sc in range(s):
                        total[sr::s, sc::s] += w[sr, sc] * g[sr::s, sc::s]
        else:
            for e, bank in zip(errors, banks):
                total += upscale_ete(e, bank)
    else:
        for e, d in zip(errors, fs.displacements):
            total += upscale_interp(e, fs.kernel, d, fs.scale)
    return total


def update_step(x: np.ndarray, fs: FrameSet, cfg: SolverConfig, banks=None, errors=None) -> np.ndarray:
    """One fixed-step update; ``banks``/``errors`` may be passed in to reuse work."""
    x = np.asarray(x, dtype=np.float64)
    if errors is None:
        errors = compute_error_maps(x, fs)
    direction = _data_direction(errors, fs, cfg, banks)
    if cfg.lam:
        direction += cfg.lam * reg_grad(x, cfg.regularizer)
    return x - cfg.eta * direction


def initial_estimate(fs: FrameSet) -> np.ndarray:
    return bicubic_resize(fs.frames[0], fs.scale)


def reconstruct(fs: FrameSet, cfg: SolverConfig, x0: np.ndarray | None = None,
                record_values: bool = True):
    """Run the fixed-step iteration; returns ``(x, trace)``.

    The estimate is returned unclamped.  Raises :class:`DivergenceError` if
    an iterate becomes non-finite, the relative change exceeds 1e3 or any
    pixel's magnitude exceeds 1e6.
    """
    x = initial_estimate(fs) if x0 is None else np.array(x0, dtype=np.float64)
    banks = build_banks(fs) if cfg.mode == "ete" else None
    errors = compute_error_maps(x, fs)
    trace = ConvergenceTrace()
    for it in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        x_new = update_step(x, fs, cfg, banks=banks, errors=errors)
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(it, "non-finite values in the estimate")
        denom = np.linalg.norm(x)
        diff = np.linalg.norm(x_new - x)
        # a step away from an all-zero iterate counts as a full (unit) change
        rel = diff / denom if denom > 0 else (0.0 if diff == 0 else 1.0)
        if rel > DIVERGENCE_LIMIT or not np.isfinite(rel):
            raise DivergenceError(it, f"relative change {rel:.3g} exceeds {DIVERGENCE_LIMIT:g}")
        peak = float(np.max(np.abs(x_new)))
        if peak > MAGNITUDE_LIMIT:
            raise DivergenceError(it, f"estimate magnitude {peak:.3g} exceeds {MAGNITUDE_LIMIT:g}")
        x = x_new
        errors = compute_error_maps(x, fs)
        ms = (time.perf_counter() - t0) * 1e3
        if record_values:
            fid = float(sum(np.sum(e * e) for e in errors))
            rv = reg_value(x, cfg.regularizer) if cfg.lam else 0.0
        else:
            fid = rv = float("nan")
        trace.records.append(TraceRecord(it, float(rel), fid, rv, ms))
        if rel < cfg.eps:
            trace.converged = True
            break
    return x, trace
