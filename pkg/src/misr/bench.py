"""Seeded degradation and method-matrix benchmarks.

A trial degrades a ground-truth image into an LR burst (frame 0 unshifted,
the others shifted uniformly in ``[-shift_range, shift_range]`` per axis),
reconstructs it with every requested method and scores the clamped result
against the ground truth on the luminance plane.
"""

from __future__ import annotations

import csv
import io
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .image import bicubic_resize, center_crop, rgb_to_yuv
from .io import load_image
from .metrics import evaluate
from .operators import DegradationParams, Displacement, add_noise, forward, frame_noise_seed
from .regularizers import RegularizerSpec
from .solver import ConvergenceTrace, DivergenceError, FrameSet, SolverConfig, reconstruct

__all__ = [
    "Method",
    "TrialSpec",
    "BenchRow",
    "BenchReport",
    "degrade",
    "draw_displacements",
    "luminance",
    "prepare_ground_truth",
    "method_matrix",
    "run_trial",
    "run_bench",
    "run_convergence",
    "synthetic_fixtures",
    "CSV_COLUMNS",
    "TIMING_COLUMNS",
]

CSV_COLUMNS = ("image", "method", "mode", "scale", "noise_sigma", "trials",
               "psnr_mean", "psnr_std", "ssim_mean", "ssim_std")
TIMING_COLUMNS = ("image", "method", "mode", "scale", "noise_sigma", "trials", "time_mean_s")


def draw_displacements(frames: int, shift_range: float, seed: int) -> list[Displacement]:
    rng = np.random.Generator(np.random.PCG64(seed))
    out = [Displacement(0.0, 0.0)]
    for _ in range(1, frames):
        dy, dx = rng.uniform(-shift_range, shift_range, size=2)
        out.append(Displacement(float(dy), float(dx)))
    return out


def degrade(ground_truth: np.ndarray, params: DegradationParams, seed: int | None = None) -> FrameSet:
    """Simulate an LR burst from ``ground_truth`` (dims must be divisible by the scale)."""
    gt = np.asarray(ground_truth, dtype=np.float64)
    s = params.scale
    if gt.ndim != 2:
        raise ValueError("ground truth must be a single (luminance) plane")
    if gt.shape[0] % s or gt.shape[1] % s:
        raise ValueError(f"ground truth {gt.shape[0]}x{gt.shape[1]} is not divisible by scale {s}; "
                         f"crop it first (--crop)")
    seed = params.rng_seed if seed is None else seed
    disps = draw_displacements(params.frames, params.shift_range, seed)
    frames, seeds = [], []
    for k, d in enumerate(disps):
        ns = frame_noise_seed(seed, k)
        frames.append(add_noise(forward(gt, d, params.kernel, s), params.noise_sigma, ns))
        seeds.append(ns)
    return FrameSet(frames, disps, params.kernel, s, seeds=seeds)


def luminance(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        return rgb_to_yuv(img).y
    return img


def prepare_ground_truth(img: np.ndarray, scale: int) -> np.ndarray:
    return np.ascontiguousarray(center_crop(luminance(img), scale))


# -- synthetic fixtures -------------------------------------------------------


def synthetic_fixtures(size: int = 96) -> dict[str, np.ndarray]:
    """Ramp, checkerboard and Gaussian blob test images, rounded to 8-bit levels.

    These are the images shipped under ``tests/fixtures`` as PGM.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    ramp = 20.0 + 210.0 * (0.6 * yy + 0.4 * xx) / (size - 1)
    checker = np.where(((yy // 8) + (xx // 8)) % 2 == 1, 200.0, 50.0)
    c = (size - 1) / 2.0
    blob = 40.0 + 180.0 * np.exp(-((yy - c) ** 2 + (xx - c * 1.1) ** 2) / (2.0 * (size / 6.0) ** 2))
    return {name: np.rint(img) for name, img in
            (("ramp", ramp), ("checkerboard", checker), ("blob", blob))}


# -- method matrix ------------------------------------------------------------


@dataclass(frozen=True)
class Method:
    """A reconstruction recipe; ``reg=None`` is the bicubic baseline."""

    reg: str | None
    mode: str

    @property
    def name(self) -> str:
        if self.reg is None:
            return "bicubic"
        return self.reg if self.mode == "interp" else f"{self.reg}_ete"


def method_matrix(regs: Sequence[str] = ("tikhonov", "tv", "btv"),
                  modes: Sequence[str] = ("interp", "ete"),
                  bicubic: bool = True) -> list[Method]:
    out = [Method(None, "bicubic")] if bicubic else []
    for reg in regs:
        for mode in modes:
            out.append(Method(reg, mode))
    return out


@dataclass(frozen=True)
class TrialSpec:
    images: dict                      # name -> ground-truth array (luminance or RGB)
    params: DegradationParams = field(default_factory=DegradationParams)
    methods: tuple = tuple(method_matrix())
    trials: int = 10
    base_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    scales: tuple = ()                # sweep; empty -> params.scale only
    noise_sigmas: tuple = ()          # sweep; empty -> params.noise_sigma only
    jobs: int = 1
    warmup: bool = True

    def conditions(self) -> list[tuple[int, float]]:
        scales = self.scales or (self.params.scale,)
        sigmas = self.noise_sigmas or (self.params.noise_sigma,)
        return [(s, n) for s in scales for n in sigmas]


@dataclass
class BenchRow:
    image: str
    method: str
    mode: str
    scale: int
    noise_sigma: float
    trials: int
    psnr_mean: float
    psnr_std: float
    ssim_mean: float
    ssim_std: float
    time_mean_s: float
    failures: int = 0


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def find(self, image: str, method: str, scale: int | None = None,
             noise_sigma: float | None = None) -> BenchRow:
        for r in self.rows:
            if r.image == image and r.method == method and \
                    (scale is None or r.scale == scale) and \
                    (noise_sigma is None or r.noise_sigma == noise_sigma):
                return r
        raise KeyError((image, method, scale, noise_sigma))

    def mean_psnr(self, method: str, scale: int | None = None, noise_sigma: float | None = None) -> float:
        vals = [r.psnr_mean for r in self.rows if r.method == method and
                (scale is None or r.scale == scale) and
                (noise_sigma is None or r.noise_sigma == noise_sigma)]
        return float(np.mean(vals))

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.image, r.method, r.mode, r.scale, f"{r.noise_sigma:g}", r.trials,
                        f"{r.psnr_mean:.6f}", f"{r.psnr_std:.6f}",
                        f"{r.ssim_mean:.6f}", f"{r.ssim_std:.6f}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def timing_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for r in self.rows:
            w.writerow([r.image, r.method, r.mode, r.scale, f"{r.noise_sigma:g}", r.trials,
                        f"{r.time_mean_s:.4f}"])
        return buf.getvalue()

    def table(self) -> str:
        head = f"{'image':<14}{'x':>3}{'noise':>7}  {'method':<14}{'PSNR':>8}{'(std)':>9}{'SSIM':>8}{'time[s]':>9}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.image:<14}{r.scale:>3}{r.noise_sigma:>7g}  {r.method:<14}"
                         f"{r.psnr_mean:>8.2f}{'(±%.2f)' % r.psnr_std:>9}{r.ssim_mean:>8.3f}"
                         f"{r.time_mean_s:>9.3f}")
        return "\n".join(lines)


def _solver_for(method: Method, base: SolverConfig) -> SolverConfig:
    return replace(base, mode=method.mode, regularizer=replace(base.regularizer, kind=method.reg))


def run_trial(gt: np.ndarray, params: DegradationParams, seed: int, methods: Sequence[Method],
              solver: SolverConfig) -> list:
    """Degrade once and run every method; returns ``(psnr, ssim, seconds, error)`` per method."""
    fs = degrade(gt, params, seed)
    out = []
    for m in methods:
        t0 = time.perf_counter()
        try:
            if m.reg is None:
                x = bicubic_resize(fs.frames[0], params.scale)
            else:
                x, _ = reconstruct(fs, _solver_for(m, solver), record_values=False)
        except DivergenceError as exc:
            out.append((math.nan, math.nan, 0.0, str(exc)))
            continue
        dt = time.perf_counter() - t0
        rep = evaluate(gt, x)
        out.append((rep.psnr, rep.ssim, dt, None))
    return out


def _trial_job(args):
    return run_trial(*args)


def _std(v: list) -> float:
    return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0


def run_bench(spec: TrialSpec, log=None) -> BenchReport:
    log = log if log is not None else sys.stderr
    report = BenchReport()
    methods = list(spec.methods)
    if spec.warmup and spec.images:
        # one discarded run per method so first-call costs stay out of the timings
        name, img = next(iter(spec.images.items()))
        s0, _ = spec.conditions()[0]
        p0 = replace(spec.params, scale=s0)
        run_trial(prepare_ground_truth(img, s0), p0, spec.base_seed, methods,
                  replace(spec.solver, max_iter=1))
    for scale, sigma in spec.conditions():
        params = replace(spec.params, scale=scale, noise_sigma=sigma)
        for name, img in spec.images.items():
            gt = prepare_ground_truth(img, scale)
            jobs = [(gt, params, spec.base_seed + t, methods, spec.solver) for t in range(spec.trials)]
            if spec.jobs > 1:
                with ProcessPoolExecutor(max_workers=spec.jobs) as ex:
                    results = list(ex.map(_trial_job, jobs))
            else:
                results = [_trial_job(j) for j in jobs]
            for mi, m in enumerate(methods):
                ps, ss, ts = [], [], []
                failures = 0
                for t, res in enumerate(results):
                    p, s_, dt, err = res[mi]
                    if err is not None:
                        failures += 1
                        msg = (f"warning: image={name} method={m.name} scale={scale} "
                               f"noise={sigma:g} trial={t} excluded: diverged ({err})")
                        report.warnings.append(msg)
                        print(msg, file=log)
                        continue
                    ps.append(p)
                    ss.append(s_)
                    ts.append(dt)
                n = len(ps)
                report.rows.append(BenchRow(
                    name, m.name, m.mode, scale, sigma, n,
                    float(np.mean(ps)) if n else math.nan, _std(ps),
                    float(np.mean(ss)) if n else math.nan, _std(ss),
                    float(np.mean(ts)) if n else math.nan, failures,
                ))
    return report


def run_convergence(image: np.ndarray, params: DegradationParams, eta: float,
                    regularizer: RegularizerSpec | None = None, lam: float = 0.1,
                    max_iter: int = 300, eps: float = 1e-5, seed: int | None = None,
                    ete_normalize: str = "joint") -> dict[str, ConvergenceTrace]:
    """Run ETE and interpolation modes on the same burst; returns both traces."""
    reg = regularizer or RegularizerSpec("tikhonov")
    gt = prepare_ground_truth(image, params.scale)
    fs = degrade(gt, params, seed)
    traces = {}
    for mode in ("ete", "interp"):
        cfg = SolverConfig(eta=eta, lam=lam, eps=eps, max_iter=max_iter, regularizer=reg,
                           mode=mode, ete_normalize=ete_normalize)
        _, traces[mode] = reconstruct(fs, cfg)
    return traces


def load_image_dir(path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"image directory not found: {path}")
    out = {}
    for p in sorted(path.iterdir()):
        if p.suffix.lower() in (".png", ".pgm"):
            out[p.stem] = load_image(p)
    if not out:
        raise FileNotFoundError(f"no .png/.pgm images in {path}")
    return out


def default_jobs() -> int:
    return max(1, min(4, os.cpu_count() or 1))


# -- burst directories --------------------------------------------------------

MANIFEST = "manifest.txt"


def frame_filename(k: int) -> str:
    return f"frame_{k:03d}.pgm"


def write_burst(out_dir, fs: FrameSet, params: DegradationParams, chroma=None) -> Path:
    """Write frames as PGM plus ``manifest.txt``; returns the manifest path.

    Header lines start with ``#`` and carry the scale and blur kernel; each
    remaining line is ``frame_index dy dx seed``.  ``chroma`` optionally holds
    the ground-truth-sized U and V planes of a color input.
    """
    from .io import save_image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, f in enumerate(fs.frames):
        save_image(out_dir / frame_filename(k), f)
    seeds = fs.seeds or [0] * len(fs)
    k_taps = fs.kernel.taps
    lines = [f"# scale {fs.scale}", f"# blur_size {fs.kernel.size}",
             f"# blur_taps {' '.join(repr(float(v)) for v in k_taps.ravel())}",
             f"# noise_sigma {params.noise_sigma!r}", "# frame_index dy dx seed"]
    for k, (d, s) in enumerate(zip(fs.displacements, seeds)):
        lines.append(f"{k} {d.dy!r} {d.dx!r} {s}")
    path = out_dir / MANIFEST
    path.write_text("\n".join(lines) + "\n")
    if chroma is not None:
        np.save(out_dir / "chroma.npy", np.stack(chroma))
    return path


def read_burst(frames_dir) -> FrameSet:
    from .operators import BlurKernel

    frames_dir = Path(frames_dir)
    path = frames_dir / MANIFEST
    if not path.is_file():
        raise FileNotFoundError(f"no {MANIFEST} in {frames_dir}")
    header, rows = {}, []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] in ("scale", "blur_size", "blur_taps", "noise_sigma"):
                header[parts[0]] = parts[1:]
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'frame_index dy dx seed'")
        try:
            rows.append((int(parts[0]), float(parts[1]), float(parts[2]), int(parts[3])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed manifest line") from None
    if "scale" not in header or "blur_taps" not in header:
        raise ValueError(f"{path}: header must record scale and blur_taps")
    scale = int(header["scale"][0])
    taps = np.array([float(v) for v in header["blur_taps"]])
    n = int(round(math.sqrt(taps.size)))
    if n * n != taps.size:
        raise ValueError(f"{path}: blur_taps is not a square kernel")
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: frame indices must run 0..M-1")
    frames = [load_image(frames_dir / frame_filename(k)) for k, *_ in rows]
    disps = [Displacement(dy, dx) for _, dy, dx, _ in rows]
    return FrameSet(frames, disps, BlurKernel(taps.reshape(n, n)), scale, seeds=[r[3] for r in rows])


def read_chroma(frames_dir):
    path = Path(frames_dir) / "chroma.npy"
    if not path.is_file():
        return None
    u, v = np.load(path)
    return u, v
